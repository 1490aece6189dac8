//! The Beta-function representation of `(1 + α)^{−θ}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quad::integrate;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCheck {
    pub theta: f64,
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// `lhs = (1+α)^{−θ}` against `rhs = sin(πθ)/π ∫₀¹ ds / (s^{1−θ}(1−s)^θ(1+αs))`.
///
/// The integral is split at 1/2; the substitutions `s = t^{1/θ}` and
/// `1 − s = t^{1/(1−θ)}` remove the endpoint singularities.
pub fn beta_identity_check(theta: f64, alpha: f64) -> Result<BetaCheck> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param(format!("θ must lie in (0, 1), got {theta}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("α must be ≥ 0, got {alpha}")));
    }
    let lhs = (1.0 + alpha).powf(-theta);
    let left = integrate(
        |t| {
            let s = t.powf(1.0 / theta);
            1.0 / (theta * (1.0 - s).powf(theta) * (1.0 + alpha * s))
        },
        0.0,
        0.5f64.powf(theta),
        1e-14,
    )?;
    let right = integrate(
        |t| {
            let s = 1.0 - t.powf(1.0 / (1.0 - theta));
            1.0 / ((1.0 - theta) * s.powf(1.0 - theta) * (1.0 + alpha * s))
        },
        0.0,
        0.5f64.powf(1.0 - theta),
        1e-14,
    )?;
    let rhs = (PI * theta).sin() / PI * (left + right);
    Ok(BetaCheck { theta, alpha, lhs, rhs })
}
