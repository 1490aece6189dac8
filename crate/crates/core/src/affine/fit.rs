//! Best affine approximation in `L_p(ball; Y)` for `p ∈ [1, ∞]`.
//!
//! Coefficients are solved in reference coordinates `z ∈ B` (the unit ball
//! of the norm) and converted to absolute coordinates at the end.
//!
//! - `p = 2`: weighted least squares.
//! - finite `p`: iteratively reweighted least squares from the `p = 2`
//!   solution with a backtracking step, so the objective never increases.
//! - `p = ∞`: Lawson reweighting (Hilbertian targets) or a reweighted
//!   `L_P` continuation, a subgradient polish, and in one dimension an
//!   exact discrete Chebyshev fit via convex hulls.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::projection::sample_on_rule;
use super::quadrature::{BallRule, QuadratureConfig};
use super::AffineMap;
use crate::geometry::{Ball, Field, TargetNorm};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    pub error: f64,
    #[serde(flatten)]
    pub map: AffineMap,
    pub iterations: usize,
    pub gap: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub quadrature: QuadratureConfig,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { quadrature: QuadratureConfig::default(), max_iter: 200, tol: 1e-8 }
    }
}

/// Best affine fit of `f` on `ball` in `L_p`.
pub fn best_affine<F: Field + ?Sized>(f: &F, ball: &Ball, p: f64) -> Result<FitReport> {
    best_affine_with(f, ball, p, &FitOptions::default())
}

pub fn best_affine_with<F: Field + ?Sized>(f: &F, ball: &Ball, p: f64, opts: &FitOptions) -> Result<FitReport> {
    if ball.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: ball.dim() });
    }
    let rule = BallRule::for_norm(&ball.norm, &opts.quadrature)?;
    let values = sample_on_rule(f, &ball.center, ball.radius, &rule)?;
    fit_values(&rule, &values, f.target(), &ball.center, ball.radius, p, opts)
}

/// Best affine fit from values sampled at `center + radius·z` on `rule`.
pub fn fit_values(
    rule: &BallRule,
    values: &[f64],
    target: &TargetNorm,
    center: &[f64],
    radius: f64,
    p: f64,
    opts: &FitOptions,
) -> Result<FitReport> {
    if !(p >= 1.0) {
        return Err(Error::param(format!("fit exponent must be ≥ 1, got {p}")));
    }
    let prob = Problem::new(rule, values, target);
    let sol = if p == 2.0 {
        let beta = prob.wls_shared(rule.weights());
        Solution { error: prob.lp_error(&beta, 2.0), beta, iterations: 1, gap: 0.0, converged: true }
    } else if p.is_infinite() {
        prob.minimax(opts)
    } else {
        prob.irls(p, opts)
    };
    let map = prob.to_absolute(&sol.beta, center, radius);
    Ok(FitReport { p, error: sol.error, map, iterations: sol.iterations, gap: sol.gap, converged: sol.converged })
}

struct Solution {
    beta: Vec<f64>,
    error: f64,
    iterations: usize,
    gap: f64,
    converged: bool,
}

struct Problem<'a> {
    n: usize,
    m: usize,
    rule: &'a BallRule,
    y: &'a [f64],
    target: &'a TargetNorm,
    /// IRLS floor, relative to the data range.
    delta: f64,
}

impl<'a> Problem<'a> {
    fn new(rule: &'a BallRule, y: &'a [f64], target: &'a TargetNorm) -> Self {
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let range = (hi - lo).abs().max(f64::MIN_POSITIVE);
        Problem { n: rule.dim(), m: target.m(), rule, y, target, delta: 1e-10 * range }
    }

    fn k(&self) -> usize {
        self.n + 1
    }

    fn nodes(&self) -> usize {
        self.rule.len()
    }

    fn residuals(&self, beta: &[f64], out: &mut [f64]) {
        let (m, k) = (self.m, self.k());
        for i in 0..self.nodes() {
            let z = self.rule.point(i);
            for c in 0..m {
                let b = &beta[c * k..(c + 1) * k];
                let fit = b[0] + b[1..].iter().zip(z).map(|(s, z)| s * z).sum::<f64>();
                out[i * m + c] = self.y[i * m + c] - fit;
            }
        }
    }

    fn norms(&self, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r = vec![0.0; self.y.len()];
        self.residuals(beta, &mut r);
        let norms = r.chunks(self.m).map(|v| self.target.norm(v)).collect();
        (r, norms)
    }

    fn lp_error(&self, beta: &[f64], p: f64) -> f64 {
        let (_, norms) = self.norms(beta);
        if p.is_infinite() {
            norms.into_iter().fold(0.0, f64::max)
        } else {
            norms.iter().zip(self.rule.weights()).map(|(e, w)| w * e.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    fn sup_error(&self, beta: &[f64]) -> f64 {
        self.lp_error(beta, f64::INFINITY)
    }

    fn solve_normal(&self, gram: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
        if let Some(ch) = gram.clone().cholesky() {
            return ch.solve(&rhs);
        }
        gram.svd(true, true).solve(&rhs, 1e-14).unwrap_or_else(|_| DVector::zeros(self.k()))
    }

    fn gram(&self, w: impl Fn(usize) -> f64) -> DMatrix<f64> {
        let k = self.k();
        let mut g = DMatrix::zeros(k, k);
        let mut phi = vec![1.0; k];
        for i in 0..self.nodes() {
            let wi = w(i);
            if wi == 0.0 {
                continue;
            }
            phi[1..].copy_from_slice(self.rule.point(i));
            for a in 0..k {
                for b in 0..=a {
                    g[(a, b)] += wi * phi[a] * phi[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                g[(b, a)] = g[(a, b)];
            }
        }
        g
    }

    fn rhs(&self, c: usize, w: impl Fn(usize) -> f64) -> DVector<f64> {
        let k = self.k();
        let mut r = DVector::zeros(k);
        for i in 0..self.nodes() {
            let wi = w(i);
            if wi == 0.0 {
                continue;
            }
            let yi = self.y[i * self.m + c];
            r[0] += wi * yi;
            for (a, z) in self.rule.point(i).iter().enumerate() {
                r[a + 1] += wi * yi * z;
            }
        }
        r
    }

    /// Weighted least squares with one weight per node.
    fn wls_shared(&self, w: &[f64]) -> Vec<f64> {
        let gram = self.gram(|i| w[i]);
        let mut beta = Vec::with_capacity(self.m * self.k());
        for c in 0..self.m {
            beta.extend(self.solve_normal(gram.clone(), self.rhs(c, |i| w[i])).iter());
        }
        beta
    }

    /// Weighted least squares with one weight per node and component.
    fn wls_split(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut beta = Vec::with_capacity(m * self.k());
        for c in 0..m {
            let wc = |i: usize| w[i * m + c];
            beta.extend(self.solve_normal(self.gram(wc), self.rhs(c, wc)).iter());
        }
        beta
    }

    /// Reweighted least-squares step towards minimising `Σ ω_i ‖r_i‖^p`.
    fn irls_step(&self, beta: &[f64], p: f64, omega: &[f64]) -> Vec<f64> {
        let (r, norms) = self.norms(beta);
        let scale = norms.iter().cloned().fold(0.0, f64::max).max(self.delta);
        let m = self.m;
        let mut w = vec![0.0; r.len()];
        let mut ratio = vec![0.0; m];
        for i in 0..self.nodes() {
            if omega[i] == 0.0 {
                continue;
            }
            let rel = (norms[i].max(self.delta) / scale).powf(p - 2.0);
            self.target.gradient_ratio(&r[i * m..(i + 1) * m], self.delta, &mut ratio);
            let nrm = norms[i].max(self.delta);
            for c in 0..m {
                // ω‖r‖^{p-1}·(g_c/r_c), divided by the constant scale^{p-2}.
                w[i * m + c] = omega[i] * rel * nrm * ratio[c];
            }
        }
        if self.target.is_hilbertian() {
            let shared: Vec<f64> = w.chunks(m).map(|c| c[0]).collect();
            self.wls_shared(&shared)
        } else {
            self.wls_split(&w)
        }
    }

    fn irls(&self, p: f64, opts: &FitOptions) -> Solution {
        let weights = self.rule.weights();
        let mut beta = self.wls_shared(weights);
        let mut err = self.lp_error(&beta, p);
        let mut gap = 0.0;
        let mut converged = false;
        let mut it = 0;
        while it < opts.max_iter {
            it += 1;
            if err == 0.0 {
                converged = true;
                gap = 0.0;
                break;
            }
            let proposal = self.irls_step(&beta, p, weights);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = beta.iter().zip(&proposal).map(|(b, q)| b + t * (q - b)).collect();
                let e = self.lp_error(&trial, p);
                if e < err {
                    accepted = Some((trial, e));
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some((trial, e)) => {
                    gap = (err - e) / err;
                    beta = trial;
                    err = e;
                    if gap < opts.tol {
                        converged = true;
                        break;
                    }
                }
                None => {
                    gap = 0.0;
                    converged = true;
                    break;
                }
            }
        }
        Solution { beta, error: err, iterations: it, gap, converged }
    }

    fn minimax(&self, opts: &FitOptions) -> Solution {
        let count = self.nodes();
        let mut best = self.wls_shared(self.rule.weights());
        let mut best_err = self.sup_error(&best);
        let mut iterations = 1;
        let mut gap = 0.0;

        if best_err > 0.0 && self.target.is_hilbertian() {
            // Lawson: multiply each node weight by its residual norm.
            let mut lambda = vec![1.0 / count as f64; count];
            let mut stall = 0;
            for _ in 0..2000 {
                iterations += 1;
                let beta = self.wls_shared(&lambda);
                let (_, norms) = self.norms(&beta);
                let e = norms.iter().cloned().fold(0.0, f64::max);
                if e < best_err {
                    gap = (best_err - e) / best_err;
                    stall = if gap < opts.tol { stall + 1 } else { 0 };
                    best_err = e;
                    best = beta;
                } else {
                    stall += 1;
                }
                let s: f64 = lambda.iter().zip(&norms).map(|(l, e)| l * e).sum();
                if s == 0.0 || stall > 50 {
                    break;
                }
                lambda.iter_mut().zip(&norms).for_each(|(l, e)| *l *= e / s);
            }
        } else if best_err > 0.0 {
            let uniform = vec![1.0; count];
            let mut beta = best.clone();
            let mut exponent = 4.0;
            while exponent <= 256.0 {
                for _ in 0..25 {
                    iterations += 1;
                    beta = self.irls_step(&beta, exponent, &uniform);
                    let e = self.sup_error(&beta);
                    if e < best_err {
                        gap = (best_err - e) / best_err;
                        best_err = e;
                        best = beta.clone();
                    }
                }
                exponent *= 2.0;
            }
        }

        if best_err > 0.0 {
            let (b, e, it, g) = self.subgradient_polish(&best, best_err);
            iterations += it;
            if e < best_err {
                gap = g;
                best = b;
                best_err = e;
            }
        }

        let sup_like = matches!(*self.target, TargetNorm::Lq { q, .. } | TargetNorm::Averaged { q, .. } if q.is_infinite());
        if self.n == 1 && (self.m == 1 || sup_like) && best_err > 0.0 {
            let k = self.k();
            let mut beta = vec![0.0; self.m * k];
            let x: Vec<f64> = (0..count).map(|i| self.rule.point(i)[0]).collect();
            for c in 0..self.m {
                let y: Vec<f64> = (0..count).map(|i| self.y[i * self.m + c]).collect();
                let (a, b) = chebyshev_1d(&x, &y);
                beta[c * k] = a;
                beta[c * k + 1] = b;
            }
            let e = self.sup_error(&beta);
            if e <= best_err * (1.0 + 1e-12) {
                gap = 0.0;
                best = beta;
                best_err = e;
            }
        }
        Solution { beta: best, error: best_err, iterations, gap, converged: gap <= opts.tol }
    }

    /// Normalised subgradient descent on the max residual, keeping the best iterate.
    fn subgradient_polish(&self, start: &[f64], start_err: f64) -> (Vec<f64>, f64, usize, f64) {
        let (m, k) = (self.m, self.k());
        let mut beta = start.to_vec();
        let mut best = beta.clone();
        let mut best_err = start_err;
        let mut last_gain = 0.0;
        let steps = 400;
        for it in 0..steps {
            let (r, norms) = self.norms(&beta);
            let (i, _) = norms
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (i, e)| if *e > acc.1 { (i, *e) } else { acc });
            let g = self.target.norming_functional(&r[i * m..(i + 1) * m]);
            let z = self.rule.point(i);
            let mut dir = vec![0.0; m * k];
            for c in 0..m {
                dir[c * k] = g[c];
                for a in 0..self.n {
                    dir[c * k + 1 + a] = g[c] * z[a];
                }
            }
            let len = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            if len == 0.0 {
                break;
            }
            let step = 0.05 * best_err / ((it + 1) as f64).sqrt();
            beta.iter_mut().zip(&dir).for_each(|(b, d)| *b += step * d / len);
            let e = self.sup_error(&beta);
            if e < best_err {
                last_gain = (best_err - e) / best_err;
                best_err = e;
                best.clone_from(&beta);
            }
        }
        (best, best_err, steps, last_gain)
    }

    fn to_absolute(&self, beta: &[f64], center: &[f64], radius: f64) -> AffineMap {
        let k = self.k();
        let value = (0..self.m).map(|c| beta[c * k]).collect();
        let linear = (0..self.m).map(|c| beta[c * k + 1..(c + 1) * k].iter().map(|s| s / radius).collect()).collect();
        AffineMap::centered(center, value, linear)
    }
}

/// Exact discrete Chebyshev line `a + b·x` for the points `(x_i, y_i)`.
///
/// The sup error as a function of the slope is convex and piecewise linear
/// with breakpoints at hull edge slopes, so the optimum is among them. Ties
/// go to the smallest intercept, then the smallest slope.
pub fn chebyshev_1d(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    let mut slopes = vec![0.0];
    for hull in [&lower, &upper] {
        for w in hull.windows(2) {
            if w[1].0 != w[0].0 {
                slopes.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
            }
        }
    }
    let eval = |b: f64| {
        let (lo, hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, y)| (lo.min(y - b * x), hi.max(y - b * x)));
        ((hi - lo) / 2.0, (hi + lo) / 2.0)
    };
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, f64, f64)> = None;
    for b in slopes {
        let (e, a) = eval(b);
        best = match best {
            None => Some((e, a, b)),
            Some((be, ba, bb)) => {
                if e < be - 1e-13 * scale {
                    Some((e, a, b))
                } else if (e - be).abs() <= 1e-13 * scale && (a, b) < (ba, bb) {
                    Some((e, a, b))
                } else {
                    Some((be, ba, bb))
                }
            }
        };
    }
    let (_, a, b) = best.expect("at least one candidate slope");
    (a, b)
}
