//! Lipschitz-constant lower bounds from lattice samples.

use rand::Rng as _;

use super::{GridFunction, NormSpec};
use crate::{par, rng, Error, Result};

#[derive(Clone, Debug)]
pub struct LipschitzOptions {
    /// Chebyshev radius of the lattice stencil. `None` picks a
    /// dimension-dependent default.
    pub stencil_radius: Option<usize>,
    /// Number of uniformly random node pairs added to the stencil pairs.
    pub far_pairs: usize,
    pub seed: u64,
}

impl Default for LipschitzOptions {
    fn default() -> Self {
        LipschitzOptions { stencil_radius: None, far_pairs: 4096, seed: 0 }
    }
}

fn default_radius(n: usize) -> usize {
    match n {
        1 => 1,
        2 => 4,
        3 => 2,
        _ => 1,
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Primitive integer offsets with `max |d_i| ≤ radius`, one of each `±d` pair.
fn stencil(n: usize, radius: usize) -> Vec<Vec<i64>> {
    let r = radius as i64;
    let side = (2 * r + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(n as u32) {
        let mut c = code;
        let d: Vec<i64> = (0..n)
            .map(|_| {
                let v = (c % side) as i64 - r;
                c /= side;
                v
            })
            .collect();
        let first = d.iter().find(|v| **v != 0);
        if !matches!(first, Some(v) if *v > 0) {
            continue;
        }
        if d.iter().fold(0usize, |g, v| gcd(g, v.unsigned_abs() as usize)) == 1 {
            out.push(d);
        }
    }
    out
}

/// Lower bound on the Lipschitz constant of `f` with respect to `spec`.
pub fn lipschitz_estimate(f: &GridFunction, spec: &NormSpec) -> Result<f64> {
    lipschitz_estimate_with(f, spec, &LipschitzOptions::default())
}

pub fn lipschitz_estimate_with(f: &GridFunction, spec: &NormSpec, opts: &LipschitzOptions) -> Result<f64> {
    let n = f.dim();
    if spec.dim != n {
        return Err(Error::DimensionMismatch { expected: n, got: spec.dim });
    }
    let radius = opts.stencil_radius.unwrap_or_else(|| default_radius(n)).max(1);
    let offsets = stencil(n, radius);
    let strides = f.strides();
    let res = f.resolution().to_vec();
    let h: Vec<f64> = (0..n).map(|a| f.spacing(a)).collect();
    let target = f.target();

    // Pre-compute the X-length and flat shift of each offset.
    let steps: Vec<(Vec<i64>, f64, i64)> = offsets
        .into_iter()
        .map(|d| {
            let dx: Vec<f64> = d.iter().zip(&h).map(|(k, h)| *k as f64 * h).collect();
            let shift: i64 = d.iter().zip(&strides).map(|(k, s)| k * *s as i64).sum();
            (d, spec.eval(&dx), shift)
        })
        .collect();

    let total = f.len();
    let chunk = 4096.max(total / 64 + 1);
    let ranges: Vec<(usize, usize)> = (0..total).step_by(chunk).map(|s| (s, (s + chunk).min(total))).collect();
    let m = f.m();
    let maxima = par::map(ranges, |(start, end)| {
        let mut best = 0.0_f64;
        let mut diff = vec![0.0; m];
        for flat in start..end {
            let idx = f.multi_index(flat);
            let v = f.value(flat);
            'offsets: for (d, len, shift) in &steps {
                for a in 0..n {
                    let j = idx[a] as i64 + d[a];
                    if j < 0 || j >= res[a] as i64 {
                        continue 'offsets;
                    }
                }
                let w = f.value((flat as i64 + shift) as usize);
                diff.iter_mut().zip(v.iter().zip(w)).for_each(|(o, (a, b))| *o = a - b);
                best = best.max(target.norm(&diff) / len);
            }
        }
        best
    });
    let mut best = maxima.into_iter().fold(0.0_f64, f64::max);

    let mut r = rng::rng(opts.seed);
    let mut diff = vec![0.0; m];
    for _ in 0..opts.far_pairs {
        let a = r.random_range(0..total);
        let b = r.random_range(0..total);
        if a == b {
            continue;
        }
        let (xa, xb) = (f.node(a), f.node(b));
        let dx: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| p - q).collect();
        diff.iter_mut().zip(f.value(a).iter().zip(f.value(b))).for_each(|(o, (p, q))| *o = p - q);
        best = best.max(target.norm(&diff) / spec.eval(&dx));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{scalar_field, FnField, TargetNorm};
    use crate::moduli::tent;
    use approx::assert_relative_eq;

    fn grid1(f: impl Fn(f64) -> f64 + Sync, res: usize) -> GridFunction {
        GridFunction::sample(&scalar_field(1, move |x| f(x[0])), vec![-1.0], vec![1.0], vec![res]).unwrap()
    }

    #[test]
    fn constant_and_identity() {
        let e = NormSpec::euclidean(1);
        assert_eq!(lipschitz_estimate(&grid1(|_| 3.0, 33), &e).unwrap(), 0.0);
        assert_relative_eq!(lipschitz_estimate(&grid1(|x| x, 33), &e).unwrap(), 1.0, epsilon = 1e-12);
    }

    /// Oracle: brute force over all lattice pairs.
    #[test]
    fn sawtooth_matches_all_pairs_brute_force() {
        for k in 2..7 {
            let res = (1 << k) + 1;
            let g = grid1(|x| tent(4.0 * x), res);
            let mut brute = 0.0_f64;
            for i in 0..res {
                for j in 0..i {
                    let (xi, xj) = (g.node(i)[0], g.node(j)[0]);
                    brute = brute.max((g.value(i)[0] - g.value(j)[0]).abs() / (xi - xj).abs());
                }
            }
            let est = lipschitz_estimate(&grid1(|x| tent(x), res), &NormSpec::euclidean(1)).unwrap();
            assert_relative_eq!(est, 1.0, epsilon = 1e-12);
            let est4 = lipschitz_estimate(&g, &NormSpec::euclidean(1)).unwrap();
            assert_relative_eq!(est4, brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn monotone_under_refinement() {
        let f = FnField::new(2, TargetNorm::lq(2, 3.0), |x: &[f64], o: &mut [f64]| {
            o[0] = (3.0 * x[0]).sin() * x[1];
            o[1] = (x[0] - x[1]).abs();
        });
        let spec = NormSpec::lp(1.5, 2).unwrap();
        let opts = LipschitzOptions { far_pairs: 0, ..Default::default() };
        let mut prev = 0.0;
        for k in 2..7 {
            let res = (1 << k) + 1;
            let g = GridFunction::sample(&f, vec![-1.0, -1.0], vec![1.0, 1.0], vec![res, res]).unwrap();
            let est = lipschitz_estimate_with(&g, &spec, &opts).unwrap();
            assert!(est >= prev - 1e-12, "{est} < {prev}");
            prev = est;
        }
    }

    #[test]
    fn stencil_is_primitive_and_half() {
        let s = stencil(2, 2);
        // Primitive vectors in [-2,2]² up to sign: (0,1),(1,0),(1,±1),(1,±2),(2,±1).
        assert_eq!(s.len(), 8);
    }
}
