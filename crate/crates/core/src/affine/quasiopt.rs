//! How far `P¹` is from the best affine fit, and the size of `T₁` on `L_p`.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fit::{fit_values, FitOptions};
use super::projection::{linear_of_values, p1_of_values, residual_error, sample_on_rule};
use super::quadrature::{BallRule, QuadratureConfig};
use crate::geometry::{Ball, Field, TargetNorm};
use crate::{par, rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiOpt {
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    pub p1_error: f64,
    pub best_error: f64,
    #[serde(with = "crate::serde_ext::real")]
    pub ratio: f64,
}

/// `‖f − P¹f‖_{L_p(ball)} / min_Λ ‖f − Λ‖_{L_p(ball)}` on a Euclidean ball,
/// with `0/0 = 1`.
pub fn quasi_opt_ratio<F: Field + ?Sized>(f: &F, ball: &Ball, p: f64) -> Result<QuasiOpt> {
    quasi_opt_ratio_with(f, ball, p, &FitOptions::default())
}

pub fn quasi_opt_ratio_with<F: Field + ?Sized>(f: &F, ball: &Ball, p: f64, opts: &FitOptions) -> Result<QuasiOpt> {
    if !ball.norm.is_euclidean() {
        return Err(Error::param("quasi-optimality is measured on Euclidean balls"));
    }
    let rule = BallRule::euclidean(ball.dim(), &opts.quadrature);
    let values = sample_on_rule(f, &ball.center, ball.radius, &rule)?;
    let target = f.target();
    let p1 = p1_of_values(&rule, &values, target.m(), &ball.center, ball.radius);
    let p1_error = residual_error(&rule, &values, target, &p1, &ball.center, ball.radius, p);
    let best_error = fit_values(&rule, &values, target, &ball.center, ball.radius, p, opts)?.error;
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    Ok(QuasiOpt { p, p1_error, best_error, ratio: zero_over_zero(p1_error, best_error, 1e-9 * scale) })
}

/// `a / b` with `0/0 = 1` and `a/0 = ∞` below the tolerance.
pub fn zero_over_zero(a: f64, b: f64, tol: f64) -> f64 {
    match (a <= tol, b <= tol) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => a / b,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Norm {
    pub n: usize,
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    /// Largest `‖T₁g‖_p / ‖g‖_p` over the test family.
    pub value: f64,
    /// `min{√(pn), n}`.
    pub reference: f64,
    /// `value / reference`.
    pub empirical_c: f64,
    pub family_size: usize,
}

fn lp_of_nodes(rule: &BallRule, values: &[f64], target: &TargetNorm, p: f64) -> f64 {
    let m = target.m();
    let mut acc = 0.0_f64;
    for (v, w) in values.chunks(m).zip(rule.weights()) {
        if *w == 0.0 {
            continue;
        }
        let e = target.norm(v);
        acc = if p.is_infinite() { acc.max(e) } else { acc + w * e.powf(p) };
    }
    if p.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / p)
    }
}

/// `‖T₁g‖_{L_p} / ‖g‖_{L_p}` on the unit ball, for node values `g`.
pub fn t1_ratio(rule: &BallRule, g: &[f64], target: &TargetNorm, p: f64) -> f64 {
    let m = target.m();
    let n = rule.dim();
    let l = linear_of_values(rule, g, m);
    let mut tg = vec![0.0; g.len()];
    for (i, out) in tg.chunks_mut(m).enumerate() {
        let z = rule.point(i);
        for (o, row) in out.iter_mut().zip(&l) {
            *o = (0..n).map(|a| row[a] * z[a]).sum();
        }
    }
    let den = lp_of_nodes(rule, g, target, p);
    if den == 0.0 {
        0.0
    } else {
        lp_of_nodes(rule, &tg, target, p) / den
    }
}

/// Empirical `L_p(B^n; Y) → L_p(B^n; Y)` norm of `g ↦ T₁g`, maximised over a
/// seeded family (Gaussian noise, ridge powers, thin caps) plus `extra`
/// node-valued functions.
pub fn t1_operator_norm(
    n: usize,
    p: f64,
    target: &TargetNorm,
    family_size: usize,
    seed: u64,
    extra: &[Vec<f64>],
    cfg: &QuadratureConfig,
) -> Result<T1Norm> {
    if !(p >= 1.0) {
        return Err(Error::param(format!("exponent must be ≥ 1, got {p}")));
    }
    let rule = BallRule::euclidean(n, cfg);
    let m = target.m();
    if let Some(bad) = extra.iter().find(|g| g.len() != rule.len() * m) {
        return Err(Error::DimensionMismatch { expected: rule.len() * m, got: bad.len() });
    }
    let rule_ref = &rule;
    let ratios = par::map((0..family_size).collect(), |k| {
        let g = family_member(rule_ref, m, k, seed);
        t1_ratio(rule_ref, &g, target, p)
    });
    let value = ratios
        .into_iter()
        .chain(extra.iter().map(|g| t1_ratio(&rule, g, target, p)))
        .fold(0.0, f64::max);
    let reference = if p.is_infinite() { n as f64 } else { (p * n as f64).sqrt().min(n as f64) };
    Ok(T1Norm { n, p, value, reference, empirical_c: value / reference, family_size: family_size + extra.len() })
}

fn family_member(rule: &BallRule, m: usize, k: usize, seed: u64) -> Vec<f64> {
    let n = rule.dim();
    let mut r = rng::task_rng(seed, k as u64);
    let mut normal = || r.sample::<f64, _>(StandardNormal);
    let v: Vec<f64> = {
        let raw: Vec<f64> = (0..n).map(|_| normal()).collect();
        let s = crate::geometry::euclid(&raw);
        raw.into_iter().map(|x| x / s).collect()
    };
    let e: Vec<f64> = (0..m).map(|_| normal()).collect();
    let kind = k % 4;
    let s = 0.1 + 2.0 * r.random::<f64>();
    let t = r.random::<f64>();
    let mut g = vec![0.0; rule.len() * m];
    for (i, out) in g.chunks_mut(m).enumerate() {
        let proj: f64 = rule.point(i).iter().zip(&v).map(|(a, b)| a * b).sum();
        let amp = match kind {
            0 => f64::NAN,
            1 => proj.signum() * proj.abs().powf(s),
            2 => f64::from(u8::from(proj > t)),
            _ => f64::from(u8::from(proj > t)) - f64::from(u8::from(proj < -t)),
        };
        for (c, o) in out.iter_mut().enumerate() {
            *o = if amp.is_nan() { r.sample::<f64, _>(StandardNormal) } else { amp * e[c] };
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{scalar_field, FnField, GridFunction};
    use crate::moduli::tent;
    use approx::assert_relative_eq;

    #[test]
    fn affine_is_zero_over_zero() {
        let f = scalar_field(2, |x| 1.0 + x[0] - 2.0 * x[1]);
        let q = quasi_opt_ratio(&f, &Ball::euclidean(vec![0.0, 0.0], 1.0).unwrap(), 3.0).unwrap();
        assert_eq!(q.ratio, 1.0);
    }

    #[test]
    fn tent_in_l2_is_optimal() {
        let g = GridFunction::sample(&scalar_field(1, |x| tent(x[0])), vec![-1.0], vec![1.0], vec![513]).unwrap();
        let q = quasi_opt_ratio(&g, &Ball::euclidean(vec![0.0], 1.0).unwrap(), 2.0).unwrap();
        assert_relative_eq!(q.ratio, 1.0, epsilon = 1e-10);
    }

    /// The chain ‖f−P¹f‖ ≤ (2 + ‖T₁‖)·dist with ‖T₁‖ measured on a family
    /// that contains the best-fit residual.
    #[test]
    fn random_field_respects_the_projection_chain() {
        let grid = {
            let mut r = rng::rng(17);
            let res = 17;
            let vals: Vec<f64> = (0..res * res).map(|_| r.random::<f64>()).collect();
            GridFunction::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![res, res], vals, TargetNorm::scalar()).unwrap()
        };
        let ball = Ball::euclidean(vec![0.0, 0.0], 0.9).unwrap();
        let p = 4.0;
        let q = quasi_opt_ratio(&grid, &ball, p).unwrap();
        let cfg = QuadratureConfig::default();
        let rule = BallRule::euclidean(2, &cfg);
        let values = sample_on_rule(&grid, &ball.center, ball.radius, &rule).unwrap();
        let fit = fit_values(&rule, &values, grid.target(), &ball.center, ball.radius, p, &FitOptions::default()).unwrap();
        let mut residual = values.clone();
        for (i, r) in residual.iter_mut().enumerate() {
            let x: Vec<f64> = rule.point(i).iter().zip(&ball.center).map(|(z, c)| c + ball.radius * z).collect();
            *r -= fit.map.eval(&x)[0];
        }
        let t1 = t1_operator_norm(2, p, grid.target(), 64, 5, &[residual], &cfg).unwrap();
        assert!(q.ratio <= 2.0 + t1.value + 1e-9, "{} vs {}", q.ratio, 2.0 + t1.value);
    }

    #[test]
    fn t1_fixes_linear_functions() {
        let cfg = QuadratureConfig::default();
        let rule = BallRule::euclidean(2, &cfg);
        let f = FnField::new(2, TargetNorm::scalar(), |x: &[f64], o: &mut [f64]| o[0] = x[0] - 3.0 * x[1]);
        let g = sample_on_rule(&f, &[0.0, 0.0], 1.0, &rule).unwrap();
        assert_relative_eq!(t1_ratio(&rule, &g, f.target(), 3.0), 1.0, epsilon = 1e-12);
    }
}
