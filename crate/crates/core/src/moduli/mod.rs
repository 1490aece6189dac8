//! Empirical moduli of affine approximability.
//!
//! [`search_modulus`] scans dyadic sub-balls of `B_X` directly;
//! [`find_affine_ball`] follows the constructive route through a radial
//! cutoff and first-moment projections. The sawtooth family and its tensor
//! version supply inputs whose moduli decay at a known rate, and
//! [`certify_upper_bound`] checks the interval-wise lower bounds on their
//! approximation error.

mod pipeline;
mod sawtooth;
mod search;
mod transfer;

pub use pipeline::{cutoff_extend, cutoff_phi, find_affine_ball, PipelineParams, PipelineResult};
pub use sawtooth::{
    certify_upper_bound, sawtooth_eta, sawtooth_f, sawtooth_field, sawtooth_into, tensor_f, tensor_field, tent,
    Certificate, IntervalRow, SawtoothSpec, TensorSpec,
};
pub use search::{search_modulus, validate_witness, BallWitness, LevelRecord, ModulusQuery, ModulusSearch};
pub use transfer::{check_lp_implies_linfty, transfer_delta, TransferCheck};
