//! Ball mean `P⁰`, first-moment operator `T` and their sum `P¹`.
//!
//! `T` is computed as `(Σ w f zᵀ)(Σ w z zᵀ)⁻¹ / u`. The second-moment matrix
//! of the Euclidean ball is `I/(n+2)`, so this is the usual
//! `(n+2)/u · E[f(x+uz) zᵀ]`, but the correction makes affine reproduction
//! exact for any node set.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::quadrature::{BallRule, QuadratureConfig};
use super::AffineMap;
use crate::geometry::{Field, TargetNorm};
use crate::{Error, Result};

/// Values of `f` at `center + radius·z` for every node `z` of `rule`,
/// node-major.
pub fn sample_on_rule<F: Field + ?Sized>(f: &F, center: &[f64], radius: f64, rule: &BallRule) -> Result<Vec<f64>> {
    let n = rule.dim();
    if f.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.dim() });
    }
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.len() });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(format!("radius must be positive, got {radius}")));
    }
    let (lo, hi) = rule.bounding_box(center, radius);
    if !f.contains_box(&lo, &hi) {
        return Err(Error::BallOutsideDomain(format!("center {center:?}, radius {radius}")));
    }
    let m = f.target().m();
    let mut values = vec![0.0; rule.len() * m];
    let mut x = vec![0.0; n];
    for (i, out) in values.chunks_mut(m).enumerate() {
        for (a, z) in rule.point(i).iter().enumerate() {
            x[a] = center[a] + radius * z;
        }
        f.eval_into(&x, out);
    }
    Ok(values)
}

/// Weighted mean of node values.
pub fn mean_of_values(rule: &BallRule, values: &[f64], m: usize) -> Vec<f64> {
    let mut mean = vec![0.0; m];
    for (v, w) in values.chunks(m).zip(rule.weights()) {
        mean.iter_mut().zip(v).for_each(|(a, v)| *a += w * v);
    }
    mean
}

/// First-moment operator in reference coordinates (`u = 1`), `m` rows.
pub fn linear_of_values(rule: &BallRule, values: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = rule.dim();
    let mut b = DMatrix::<f64>::zeros(m, n);
    for (i, (v, w)) in values.chunks(m).zip(rule.weights()).enumerate() {
        if *w == 0.0 {
            continue;
        }
        let z = rule.point(i);
        for c in 0..m {
            for a in 0..n {
                b[(c, a)] += w * v[c] * z[a];
            }
        }
    }
    let moments = DMatrix::from_row_slice(n, n, &rule.second_moments());
    let inv = moments.try_inverse().expect("ball second moments are positive definite");
    let t = b * inv;
    (0..m).map(|c| t.row(c).iter().copied().collect()).collect()
}

/// `P¹` from node values sampled at `center + radius·z`.
pub fn p1_of_values(rule: &BallRule, values: &[f64], m: usize, center: &[f64], radius: f64) -> AffineMap {
    let mean = mean_of_values(rule, values, m);
    let linear = linear_of_values(rule, values, m)
        .into_iter()
        .map(|row| row.into_iter().map(|t| t / radius).collect())
        .collect();
    AffineMap::centered(center, mean, linear)
}

/// `(Σ w ‖f − Λ‖^p)^{1/p}` over the rule, or the max over all nodes for `p = ∞`.
pub fn residual_error(
    rule: &BallRule,
    values: &[f64],
    target: &TargetNorm,
    map: &AffineMap,
    center: &[f64],
    radius: f64,
    p: f64,
) -> f64 {
    let m = target.m();
    let n = rule.dim();
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; m];
    let mut acc = 0.0_f64;
    for (i, (v, w)) in values.chunks(m).zip(rule.weights()).enumerate() {
        for (a, z) in rule.point(i).iter().enumerate() {
            x[a] = center[a] + radius * z;
        }
        map.eval_into(&x, &mut r);
        r.iter_mut().zip(v).for_each(|(r, v)| *r = v - *r);
        let e = target.norm(&r);
        if p.is_infinite() {
            acc = acc.max(e);
        } else if *w > 0.0 {
            acc += w * e.powf(p);
        }
    }
    if p.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / p)
    }
}

/// Computes `P⁰_u`, `T_u` and `P¹_u` on Euclidean balls with a fixed rule.
#[derive(Clone, Debug)]
pub struct Projector {
    rule: Arc<BallRule>,
}

impl Projector {
    pub fn new(n: usize, cfg: &QuadratureConfig) -> Self {
        Projector { rule: BallRule::euclidean(n, cfg) }
    }

    pub fn rule(&self) -> &BallRule {
        &self.rule
    }

    pub fn mean<F: Field + ?Sized>(&self, f: &F, center: &[f64], u: f64) -> Result<Vec<f64>> {
        let v = sample_on_rule(f, center, u, &self.rule)?;
        Ok(mean_of_values(&self.rule, &v, f.target().m()))
    }

    pub fn linear<F: Field + ?Sized>(&self, f: &F, center: &[f64], u: f64) -> Result<Vec<Vec<f64>>> {
        let v = sample_on_rule(f, center, u, &self.rule)?;
        Ok(linear_of_values(&self.rule, &v, f.target().m())
            .into_iter()
            .map(|row| row.into_iter().map(|t| t / u).collect())
            .collect())
    }

    pub fn p1<F: Field + ?Sized>(&self, f: &F, center: &[f64], u: f64) -> Result<AffineMap> {
        let v = sample_on_rule(f, center, u, &self.rule)?;
        Ok(p1_of_values(&self.rule, &v, f.target().m(), center, u))
    }
}

fn default_projector(n: usize) -> Projector {
    Projector::new(n, &QuadratureConfig::default())
}

/// Mean of `f` over the Euclidean ball `center + u·B^n`.
pub fn mean_p0<F: Field + ?Sized>(f: &F, center: &[f64], u: f64) -> Result<Vec<f64>> {
    default_projector(f.dim()).mean(f, center, u)
}

/// Matrix of `T_u f` at `center` (`m` rows, `n` columns).
pub fn linear_t<F: Field + ?Sized>(f: &F, center: &[f64], u: f64) -> Result<Vec<Vec<f64>>> {
    default_projector(f.dim()).linear(f, center, u)
}

/// `P¹_u f = P⁰_u f + T_u f(· − center)` as an affine map in absolute coordinates.
pub fn legendre_p1<F: Field + ?Sized>(f: &F, center: &[f64], u: f64) -> Result<AffineMap> {
    default_projector(f.dim()).p1(f, center, u)
}
