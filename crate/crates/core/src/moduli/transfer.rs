//! Averaged-to-uniform transfer on a single ball: an affine map that is
//! `(ε/9)^{1+n/p}`-close in normalised `L_p` to a Lipschitz map is
//! `ε`-close pointwise.

use serde::{Deserialize, Serialize};

use crate::affine::{op_norm, residual_error, sample_on_rule, AffineMap, BallRule, QuadratureConfig};
use crate::geometry::{sample_ball, Ball, Field};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    /// `(ε/9)^{1+n/p}`.
    pub delta: f64,
    /// `‖f − Λ‖_{L_p(ball)} / (ρ·Lip f)`, normalised average.
    pub lp_relative: f64,
    /// `sup_ball ‖f − Λ‖ / (ρ·Lip f)` over dense samples.
    pub linf_relative: f64,
    /// `‖Λ‖_Lip ≤ 3·Lip f`.
    pub map_norm_ok: bool,
    pub premise: bool,
    pub conclusion: bool,
    pub holds: bool,
}

/// Evaluates both sides of the transfer for `f` and `map` on `ball`.
///
/// `lip` is the Lipschitz constant of `f` with respect to the ball's norm;
/// errors are measured relative to `ρ·lip`. The implication is vacuous when
/// the premise fails, including when `Λ` is too steep.
pub fn check_lp_implies_linfty<F: Field + ?Sized>(
    f: &F,
    ball: &Ball,
    map: &AffineMap,
    epsilon: f64,
    p: f64,
    lip: f64,
) -> Result<TransferCheck> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must lie in [1, ∞), got {p}")));
    }
    if !(lip > 0.0 && lip.is_finite()) {
        return Err(Error::param(format!("Lipschitz constant must be positive, got {lip}")));
    }
    let n = ball.dim();
    let delta = transfer_delta(epsilon, n, p);
    let scale = ball.radius * lip;
    let target = f.target();

    let rule = BallRule::for_norm(&ball.norm, &QuadratureConfig::default())?;
    let values = sample_on_rule(f, &ball.center, ball.radius, &rule)?;
    let lp = residual_error(&rule, &values, target, map, &ball.center, ball.radius, p);
    let mut sup = residual_error(&rule, &values, target, map, &ball.center, ball.radius, f64::INFINITY);
    let seed = 0x7a11 ^ (ball.radius.to_bits() >> 12);
    let mut r = vec![0.0; target.m()];
    for x in sample_ball(ball, 8192, seed)? {
        f.eval_into(&x, &mut r);
        let l = map.eval(&x);
        r.iter_mut().zip(&l).for_each(|(a, b)| *a -= b);
        sup = sup.max(target.norm(&r));
    }

    let map_norm = op_norm(&map.linear, &ball.norm, target)?.value;
    let map_norm_ok = map_norm <= 3.0 * lip * (1.0 + 1e-12);
    let (lp_relative, linf_relative) = (lp / scale, sup / scale);
    let premise = map_norm_ok && lp_relative <= delta;
    let conclusion = linf_relative <= epsilon;
    Ok(TransferCheck {
        delta,
        lp_relative,
        linf_relative,
        map_norm_ok,
        premise,
        conclusion,
        holds: !premise || conclusion,
    })
}

/// `(ε/9)^{1+n/p}`.
pub fn transfer_delta(epsilon: f64, n: usize, p: f64) -> f64 {
    (epsilon / 9.0).powf(1.0 + n as f64 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{scalar_field, NormSpec};
    use approx::assert_relative_eq;

    #[test]
    fn delta_arithmetic() {
        assert_relative_eq!(transfer_delta(0.9, 1, 2.0), 0.1_f64.powf(1.5), epsilon = 1e-15);
        assert_relative_eq!(transfer_delta(0.9, 1, 2.0), 0.031_622_776_601_683_79, epsilon = 1e-12);
    }

    #[test]
    fn exact_map_is_vacuous_success() {
        let f = scalar_field(2, |x| 1.0 + x[0] - 2.0 * x[1]);
        let map = AffineMap::new(vec![1.0], vec![vec![1.0, -2.0]]).unwrap();
        let ball = Ball::new(vec![0.1, 0.0], 0.5, NormSpec::lp(1.0, 2).unwrap()).unwrap();
        let c = check_lp_implies_linfty(&f, &ball, &map, 0.5, 2.0, 2.0).unwrap();
        assert!(c.lp_relative < 1e-14 && c.linf_relative < 1e-14);
        assert!(c.premise && c.conclusion && c.holds);
    }

    #[test]
    fn steep_map_makes_premise_false() {
        let f = scalar_field(1, |x| x[0]);
        let map = AffineMap::new(vec![0.0], vec![vec![10.0]]).unwrap();
        let c = check_lp_implies_linfty(&f, &Ball::euclidean(vec![0.0], 0.1).unwrap(), &map, 0.5, 2.0, 1.0).unwrap();
        assert!(!c.map_norm_ok && !c.premise && c.holds);
    }
}
