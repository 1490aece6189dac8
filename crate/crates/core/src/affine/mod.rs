//! Affine projections and best affine approximation on balls.

mod fit;
mod map;
mod opnorm;
mod projection;
mod quadrature;
mod quasiopt;

pub use fit::{best_affine, best_affine_with, chebyshev_1d, fit_values, FitOptions, FitReport};
pub use map::AffineMap;
pub use opnorm::{op_norm, op_norm_sampled, OpNorm};
pub use projection::{
    legendre_p1, linear_of_values, linear_t, mean_of_values, mean_p0, p1_of_values, residual_error,
    sample_on_rule, Projector,
};
pub use quadrature::{composite_gauss_legendre, gauss_legendre, BallRule, QuadratureConfig};
pub use quasiopt::{quasi_opt_ratio, quasi_opt_ratio_with, t1_operator_norm, t1_ratio, zero_over_zero, QuasiOpt, T1Norm};
