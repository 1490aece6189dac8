//! Littlewood–Paley bumps, periodic spectral multipliers and Sobolev-type
//! seminorms.

mod beta;
mod bumps;
mod sobolev;
mod spectral;
mod square;

pub use beta::{beta_identity_check, BetaCheck};
pub use bumps::{bump_eval, omega, phi, psi, theta, BumpKind};
pub use sobolev::{riesz_hsp, sobolev_w1, sobolev_wsp, Extension};
pub use spectral::{
    apply_multiplier, derivative_symbol, frac_laplacian_symbol, MultiplierSpec, SpectralField,
};
pub use square::{lp_randomized_square_function, square_function_exhaustive, SquareFunctionReport};
