//! Operator norms `‖T‖_{X→Y}` of linear parts.

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::geometry::{sample_sphere, NormKind, NormSpec, TargetNorm};
use crate::{rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpNorm {
    pub value: f64,
    /// `true` for closed-form values; otherwise `value` is a lower bound from
    /// `samples` sphere samples followed by local ascent.
    pub exact: bool,
    pub samples: usize,
}

const SIGN_ENUMERATION_LIMIT: usize = 16;
const DEFAULT_SAMPLES: usize = 4096;

fn apply(t: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    t.iter().map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
}

fn sign_vectors(k: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..(1usize << k)).map(move |bits| (0..k).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
}

/// Multiple `c` with `‖v‖_Y = c‖v‖₂`, when the target is Hilbertian.
fn hilbert_factor(target: &TargetNorm) -> Option<f64> {
    if !target.is_hilbertian() {
        return None;
    }
    let m = target.m();
    let mut e = vec![0.0; m];
    e[0] = 1.0;
    Some(target.norm(&e))
}

/// `‖T‖` from the unit ball of `domain` into `target`, for an `m×n` matrix.
pub fn op_norm(linear: &[Vec<f64>], domain: &NormSpec, target: &TargetNorm) -> Result<OpNorm> {
    op_norm_sampled(linear, domain, target, DEFAULT_SAMPLES, 0)
}

pub fn op_norm_sampled(
    linear: &[Vec<f64>],
    domain: &NormSpec,
    target: &TargetNorm,
    samples: usize,
    seed: u64,
) -> Result<OpNorm> {
    let m = target.m();
    let n = domain.dim;
    if linear.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: linear.len() });
    }
    if let Some(row) = linear.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: row.len() });
    }
    let exact = |value: f64| Ok(OpNorm { value, exact: true, samples: 0 });

    if n == 1 {
        return exact(target.norm(&apply(linear, &[1.0])) / domain.eval(&[1.0]));
    }
    if let (Some(c), Some(map)) = (hilbert_factor(target), domain.ellipsoid_map()) {
        let t = DMatrix::from_fn(m, n, |i, j| linear[i][j]);
        let s = (t * map).singular_values().max();
        return exact(c * s);
    }
    match domain.kind {
        NormKind::Lp { p } if p == 1.0 => {
            let best = (0..n)
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    target.norm(&apply(linear, &e))
                })
                .fold(0.0, f64::max);
            return exact(best / domain.scale);
        }
        NormKind::Lp { p } if p.is_infinite() && n <= SIGN_ENUMERATION_LIMIT => {
            let best = sign_vectors(n).map(|s| target.norm(&apply(linear, &s))).fold(0.0, f64::max);
            return exact(best / domain.scale);
        }
        _ => {}
    }
    let sup_target = matches!(*target, TargetNorm::Lq { q, .. } | TargetNorm::Averaged { q, .. } if q.is_infinite());
    if sup_target {
        return exact(linear.iter().map(|row| domain.dual_eval(row)).fold(0.0, f64::max));
    }
    if matches!(*target, TargetNorm::Lq { q, .. } if q == 1.0) && m <= SIGN_ENUMERATION_LIMIT {
        let best = sign_vectors(m)
            .map(|s| {
                let row: Vec<f64> = (0..n).map(|j| (0..m).map(|i| s[i] * linear[i][j]).sum()).collect();
                domain.dual_eval(&row)
            })
            .fold(0.0, f64::max);
        return exact(best);
    }
    Ok(OpNorm { value: ascend(linear, domain, target, samples, seed), exact: false, samples })
}

/// Sphere sampling followed by random local ascent from the best starts.
fn ascend(linear: &[Vec<f64>], domain: &NormSpec, target: &TargetNorm, samples: usize, seed: u64) -> f64 {
    let n = domain.dim;
    let ratio = |w: &[f64]| target.norm(&apply(linear, w)) / domain.eval(w);
    let mut starts: Vec<(f64, Vec<f64>)> =
        sample_sphere(n, samples.max(1), seed).into_iter().map(|w| (ratio(&w), w)).collect();
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut r = rng::rng(rng::derive_seed(seed, 1));
    let mut best = starts.first().map_or(0.0, |s| s.0);
    for (mut val, mut w) in starts.into_iter().take(8) {
        let mut step = 0.1;
        while step > 1e-10 {
            let mut improved = false;
            for _ in 0..4 * n {
                let trial: Vec<f64> = w.iter().map(|x| x + step * (2.0 * r.random::<f64>() - 1.0)).collect();
                let v = ratio(&trial);
                if v > val {
                    val = v;
                    w = trial;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    best
}
