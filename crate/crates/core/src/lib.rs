//! Numerical laboratory for quantitative affine approximation of
//! vector-valued Lipschitz maps.
//!
//! The crate is organised by subsystem:
//!
//! - [`geometry`]: finite-dimensional norms, balls, sampled fields and
//!   Lipschitz estimates.
//! - [`affine`]: ball quadrature, the mean / first-moment projections and
//!   best affine fits in `L_p` and `L_∞`.
//! - [`harmonic`]: Littlewood–Paley bumps, periodic spectral multipliers and
//!   Sobolev / Riesz-potential seminorms.
//! - [`dorronsoro`]: the square-function defect integral and its comparison
//!   against Sobolev seminorms.
//! - [`moduli`]: empirical moduli of affine approximability, the sawtooth
//!   counterexamples and the constructive sub-ball pipeline.
//! - [`banach`]: brute-force UMD, Burkholder and cotype estimates on dyadic
//!   martingales.
//! - [`runner`]: experiment configuration, builtin corpus and reports.

pub mod affine;
pub mod banach;
pub mod dorronsoro;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod moduli;
pub mod runner;

mod par;
pub mod quad;
pub mod rng;
pub mod serde_ext;

pub use error::{Error, Result};
pub use geometry::{Ball, Field, FnField, GridFunction, NormSpec, TargetNorm};
