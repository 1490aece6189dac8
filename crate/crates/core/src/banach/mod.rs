//! UMD, type and cotype constants estimated on small dyadic martingales.
//!
//! Every estimate is a supremum over finitely many martingales or vectors,
//! hence a lower bound for the true constant, and carries a witness from
//! which it can be recomputed.

mod constants;
mod martingale;

pub use constants::{
    beta_for_martingale, beta_lower_bound, burkholder_constant, cotype_constant, reevaluate, type_constant,
    umd_depth_trace, umd_estimates, umd_lower_bounds, umd_ratio, ConstantEstimate, ConstantKind, MartingaleFamily, UmdEstimates,
    Witness, MAX_ENUM_DEPTH,
};
pub use martingale::{pisier_lp_martingale, DyadicMartingale, MAX_DEPTH};
