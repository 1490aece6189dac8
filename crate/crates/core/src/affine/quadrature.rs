//! Quadrature rules on the unit ball of a norm.
//!
//! A [`BallRule`] holds nodes in the reference unit ball together with
//! weights summing to one, so weighted sums are ball averages. Some nodes
//! carry zero weight: they sit on the boundary (and at the centre) so that
//! sup-norm computations see the whole closed ball.
//!
//! - `n = 1`: composite Gauss–Legendre on dyadic panels.
//! - `n = 2`: polar rule, composite Gauss–Legendre in angle (eight panels of
//!   width π/4, matching the kinks of ℓ₁/ℓ∞ balls) and in the radial
//!   fraction up to the boundary.
//! - `n ≥ 3`: shifted Halton points rejected to the ball, symmetrised.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::geometry::NormSpec;
use crate::{rng, Error, Result};

const PANEL_ORDER: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Approximate number of weighted nodes.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Seed of the quasi-Monte Carlo shift used for `n ≥ 3`.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_nodes() -> usize {
    4096
}
fn default_seed() -> u64 {
    0x5eed
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { nodes: default_nodes(), seed: default_seed() }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[k - 1 - i] = z;
        w[i] = wi;
        w[k - 1 - i] = wi;
    }
    if k % 2 == 1 {
        x[k / 2] = 0.0;
    }
    (x, w)
}

/// Composite Gauss–Legendre on `[a, b]` with `panels` equal panels of order `k`.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(k);
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * k);
    let mut w = Vec::with_capacity(panels * k);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(lo + 0.5 * h * (xi + 1.0));
            w.push(0.5 * h * wi);
        }
    }
    (x, w)
}

/// Nodes in the reference unit ball with weights summing to one.
#[derive(Clone, Debug)]
pub struct BallRule {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    /// Half-width of the reference ball along each axis.
    extent: Vec<f64>,
}

impl BallRule {
    pub fn euclidean(n: usize, cfg: &QuadratureConfig) -> Arc<BallRule> {
        Self::for_norm(&NormSpec::euclidean(n), cfg).expect("the Euclidean ball is not degenerate")
    }

    /// Rule for the unit ball of `spec`, cached per `(spec, cfg)`.
    pub fn for_norm(spec: &NormSpec, cfg: &QuadratureConfig) -> Result<Arc<BallRule>> {
        static CACHE: OnceLock<Mutex<HashMap<String, Arc<BallRule>>>> = OnceLock::new();
        let key = format!("{}|{}|{}", serde_json::to_string(spec)?, cfg.nodes, cfg.seed);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&key) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(Self::build(spec, cfg)?);
        cache.lock().expect("rule cache poisoned").insert(key, rule.clone());
        Ok(rule)
    }

    fn build(spec: &NormSpec, cfg: &QuadratureConfig) -> Result<BallRule> {
        if cfg.nodes < 16 {
            return Err(Error::param("quadrature needs at least 16 nodes"));
        }
        let extent: Vec<f64> = (0..spec.dim).map(|i| spec.axis_extent(i)).collect();
        let (points, mut weights) = match spec.dim {
            1 => rule_1d(extent[0], cfg.nodes),
            2 => rule_2d(spec, cfg.nodes),
            _ => rule_qmc(spec, &extent, cfg)?,
        };
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(BallRule { dim: spec.dim, points, weights, extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes, including zero-weight boundary nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    /// Bounding box of `center + radius·B`.
    pub fn bounding_box(&self, center: &[f64], radius: f64) -> (Vec<f64>, Vec<f64>) {
        let lo = center.iter().zip(&self.extent).map(|(c, e)| c - radius * e).collect();
        let hi = center.iter().zip(&self.extent).map(|(c, e)| c + radius * e).collect();
        (lo, hi)
    }

    /// Weighted second-moment matrix `Σ w z zᵀ`, row-major.
    pub fn second_moments(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for (z, w) in self.points.chunks(n).zip(&self.weights) {
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += w * z[i] * z[j];
                }
            }
        }
        m
    }
}

fn rule_1d(extent: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = (nodes / PANEL_ORDER).max(1).next_power_of_two();
    let (mut x, mut w) = composite_gauss_legendre(-extent, extent, panels, PANEL_ORDER);
    for p in 0..=panels {
        x.push(-extent + 2.0 * extent * p as f64 / panels as f64);
        w.push(0.0);
    }
    (x, w)
}

fn rule_2d(spec: &NormSpec, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    // Radial integrands of smooth fields are nearly polynomial in t, while
    // the boundary radius varies with angle, so most nodes go to the angle.
    let side = (nodes as f64).sqrt().round() as usize;
    let radial_panels = (side / (2 * PANEL_ORDER)).max(1);
    let angular_order = (nodes / (radial_panels * PANEL_ORDER) / 8).max(2);
    let (t, wt) = composite_gauss_legendre(0.0, 1.0, radial_panels, PANEL_ORDER);
    let (th, wth) = composite_gauss_legendre(0.0, 2.0 * PI, 8, angular_order);
    let boundary = |theta: f64| {
        let d = [theta.cos(), theta.sin()];
        (d, 1.0 / spec.eval(&d))
    };
    let mut pts = Vec::new();
    let mut w = Vec::new();
    for (theta, wa) in th.iter().zip(&wth) {
        let (d, rho) = boundary(*theta);
        for (ti, wi) in t.iter().zip(&wt) {
            let r = rho * ti;
            pts.extend([r * d[0], r * d[1]]);
            w.push(wa * wi * rho * rho * ti);
        }
        pts.extend([rho * d[0], rho * d[1]]);
        w.push(0.0);
    }
    for k in 0..8 {
        let (d, rho) = boundary(k as f64 * PI / 4.0);
        pts.extend([rho * d[0], rho * d[1]]);
        w.push(0.0);
    }
    pts.extend([0.0, 0.0]);
    w.push(0.0);
    (pts, w)
}

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut out) = (inv, 0.0);
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

fn rule_qmc(spec: &NormSpec, extent: &[f64], cfg: &QuadratureConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = spec.dim;
    if n > PRIMES.len() {
        return Err(Error::param(format!("ball quadrature supports n ≤ {}", PRIMES.len())));
    }
    let mut r = rng::rng(cfg.seed);
    let shift: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let half = cfg.nodes.div_ceil(2);
    let mut pts = Vec::with_capacity(2 * half * n);
    let mut accepted = 0usize;
    let mut i: u64 = 0;
    let limit: u64 = 200_000_000;
    let mut z = vec![0.0; n];
    while accepted < half {
        i += 1;
        if i > limit {
            return Err(Error::DegenerateNorm { rate: accepted as f64 / i as f64, attempts: i });
        }
        for a in 0..n {
            let u = (radical_inverse(i, PRIMES[a]) + shift[a]).fract();
            z[a] = (2.0 * u - 1.0) * extent[a];
        }
        if spec.eval(&z) <= 1.0 {
            pts.extend_from_slice(&z);
            pts.extend(z.iter().map(|v| -v));
            accepted += 1;
        }
    }
    let mut w = vec![1.0; pts.len() / n];
    let boundary: Vec<f64> = pts
        .chunks(n)
        .take(half / 4 * 2)
        .flat_map(|p| {
            let s = spec.eval(p);
            p.iter().map(move |v| v / s)
        })
        .collect();
    w.extend(std::iter::repeat_n(0.0, boundary.len() / n + 1));
    pts.extend(boundary);
    pts.extend(std::iter::repeat_n(0.0, n));
    Ok((pts, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for k in 1..20 {
            let (x, w) = gauss_legendre(k);
            for deg in 0..(2 * k) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_relative_eq!(q, exact, epsilon = 1e-13);
            }
        }
    }

    fn moments(rule: &BallRule) -> (Vec<f64>, Vec<f64>) {
        let n = rule.dim();
        let mut first = vec![0.0; n];
        for (z, w) in rule.points().chunks(n).zip(rule.weights()) {
            first.iter_mut().zip(z).for_each(|(f, z)| *f += w * z);
        }
        (first, rule.second_moments())
    }

    #[test]
    fn euclidean_rules_have_exact_low_moments() {
        for n in 1..=3 {
            let rule = BallRule::euclidean(n, &QuadratureConfig::default());
            assert_relative_eq!(rule.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-13);
            let (first, second) = moments(&rule);
            for i in 0..n {
                assert!(first[i].abs() < 1e-14, "first moment {first:?}");
                for j in 0..n {
                    let exact = if i == j { 1.0 / (n as f64 + 2.0) } else { 0.0 };
                    // QMC in n ≥ 3 only approximates the second moments.
                    let tol = if n <= 2 { 1e-13 } else { 5e-3 };
                    assert!((second[i * n + j] - exact).abs() < tol, "n={n} {second:?}");
                }
            }
        }
    }

    #[test]
    fn sup_norm_rule_is_the_square() {
        let spec = NormSpec::lp(f64::INFINITY, 2).unwrap();
        let rule = BallRule::for_norm(&spec, &QuadratureConfig::default()).unwrap();
        // E[z₁²] over [-1,1]² is 1/3; E[z₁² z₂²] is 1/9.
        let (mut a, mut b) = (0.0, 0.0);
        for (z, w) in rule.points().chunks(2).zip(rule.weights()) {
            a += w * z[0] * z[0];
            b += w * z[0] * z[0] * z[1] * z[1];
            assert!(spec.eval(z) <= 1.0 + 1e-12);
        }
        assert_relative_eq!(a, 1.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(b, 1.0 / 9.0, epsilon = 1e-13);
    }

    #[test]
    fn rules_include_boundary_nodes() {
        let rule = BallRule::euclidean(1, &QuadratureConfig::default());
        let max = rule.points().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert_eq!(max, 1.0);
    }
}
