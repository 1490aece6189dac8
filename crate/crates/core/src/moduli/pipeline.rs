//! Constructive sub-ball search: extend `f` radially to a compactly supported
//! map, locate a Euclidean ball where the first-moment projection has small
//! defect, then shrink to an `X`-ball inside it.

use serde::{Deserialize, Serialize};

use super::search::{ball_error, candidate_order, level_centers, validate_witness, BallWitness, Candidate};
use crate::affine::{op_norm, p1_of_values, residual_error, sample_on_rule, AffineMap, BallRule, QuadratureConfig};
use crate::geometry::{euclid, lipschitz_estimate, sample_ball, Ball, Field, FnField, GridFunction, NormSpec};
use crate::{par, rng, Error, Result};

/// Radial cutoff: `1` on `[0, 1/√n]`, linear down to `0` at `(1 + 1/n)/√n`.
pub fn cutoff_phi(n: usize, u: f64) -> f64 {
    let nf = n as f64;
    let s = nf.sqrt();
    if u <= 1.0 / s {
        1.0
    } else if u <= (1.0 + 1.0 / nf) / s {
        (nf + 1.0 - nf * s * u).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// `F(x) = f(φ(‖x‖₂)·x) − f(0)`, sampled on a lattice aligned with the input
/// lattice and covering `[-c, c]^n` with `c = 1.25(1 + 1/n)/√n`.
///
/// `F` agrees with `f − f(0)` on `(1/√n)B^n` and is constant (zero) outside
/// `((1 + 1/n)/√n)B^n`.
pub fn cutoff_extend(f: &GridFunction) -> Result<GridFunction> {
    let n = f.dim();
    let inner = 1.0 / (n as f64).sqrt();
    if !f.contains_box(&vec![-inner; n], &vec![inner; n]) {
        return Err(Error::BallOutsideDomain(format!("cutoff needs [-{inner}, {inner}]^{n} inside the grid")));
    }
    let c = 1.25 * (1.0 + 1.0 / n as f64) * inner;
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut res = Vec::with_capacity(n);
    for a in 0..n {
        let h = f.spacing(a);
        let origin = f.lower()[a] + (-f.lower()[a] / h).round() * h;
        let below = ((origin + c) / h).ceil();
        let above = ((c - origin) / h).ceil();
        lower.push(origin - below * h);
        upper.push(origin + above * h);
        res.push((below + above) as usize + 1);
    }
    GridFunction::sample(&extension(f), lower, upper, res)
}

/// The extension as an exact composition, without a second lattice.
fn extension(f: &GridFunction) -> FnField<impl Fn(&[f64], &mut [f64]) + Sync + '_> {
    let n = f.dim();
    let f0 = f.eval(&vec![0.0; n]);
    FnField::new(n, f.target().clone(), move |x: &[f64], out: &mut [f64]| {
        let t = cutoff_phi(n, euclid(x));
        let w: Vec<f64> = x.iter().map(|v| t * v).collect();
        f.eval_into(&w, out);
        out.iter_mut().zip(&f0).for_each(|(o, z)| *o -= z);
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineParams {
    /// Smallest Euclidean scale `u` scanned.
    pub u_min: f64,
    /// Euclidean centres per level; `None` uses `64·2^j` capped at 2048.
    #[serde(default)]
    pub center_samples: Option<usize>,
    /// Best-ranked Euclidean balls refined per level.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    /// `X`-ball centres tried inside each candidate.
    #[serde(default = "default_sub_centers")]
    pub sub_centers: usize,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub lip: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_candidates() -> usize {
    8
}
fn default_sub_centers() -> usize {
    32
}
fn default_nodes() -> usize {
    1024
}

impl PipelineParams {
    pub fn new(u_min: f64) -> Self {
        PipelineParams {
            u_min,
            center_samples: None,
            candidates: default_candidates(),
            sub_centers: default_sub_centers(),
            nodes: default_nodes(),
            lip: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    /// Best `X`-ball found; when `met` is false it is the closest miss.
    pub witness: BallWitness,
    pub met: bool,
    /// Euclidean scale and centre of the ball whose `P¹` produced the map.
    pub u: f64,
    pub euclidean_center: Vec<f64>,
    /// `(⨍ ‖F − P¹F‖^p)^{1/p} / u` on the Euclidean ball.
    pub normalized_defect: f64,
    /// Relative error under an independent denser rule.
    pub validated_relative_error: f64,
    pub levels_scanned: usize,
}

struct Ranked {
    center: Vec<f64>,
    score: f64,
    map: AffineMap,
}

/// Runs the constructive search for an `X`-ball of radius `u/n` on which
/// `P¹` of the extended map is `ε`-accurate.
///
/// `x_norm` should be in John position, so that `B^n ⊆ B_X ⊆ √n B^n` and the
/// `X`-ball sits inside the Euclidean ball it was derived from.
pub fn find_affine_ball(
    f: &GridFunction,
    x_norm: &NormSpec,
    epsilon: f64,
    p: f64,
    params: &PipelineParams,
) -> Result<PipelineResult> {
    let n = f.dim();
    if x_norm.dim != n {
        return Err(Error::DimensionMismatch { expected: n, got: x_norm.dim });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    if !(p >= 1.0) {
        return Err(Error::param(format!("p must be ≥ 1, got {p}")));
    }
    if params.candidates == 0 || params.sub_centers == 0 || params.center_samples == Some(0) {
        return Err(Error::param("candidate and centre counts must be positive"));
    }
    let inner = 1.0 / (n as f64).sqrt();
    if !f.contains_box(&vec![-inner; n], &vec![inner; n]) {
        return Err(Error::BallOutsideDomain(format!("cutoff needs [-{inner}, {inner}]^{n} inside the grid")));
    }
    let big = extension(f);
    let lip = match params.lip {
        Some(l) => l,
        None => lipschitz_estimate(f, x_norm)?,
    };
    let lip = if lip > 0.0 { lip } else { 1.0 };
    let f0 = f.eval(&vec![0.0; n]);
    let cfg = QuadratureConfig { nodes: params.nodes, seed: params.seed };
    let euclid_rule = BallRule::euclidean(n, &cfg);
    let x_rule = BallRule::for_norm(x_norm, &cfg)?;
    let e_norm = NormSpec::euclidean(n);

    let levels = ((inner / params.u_min).log2() + 1e-9).floor().max(0.0) as u32;
    let mut best: Option<(Candidate, f64, Vec<f64>, f64)> = None;
    let mut scanned = 0;
    for level in 0..=levels {
        scanned += 1;
        let u = inner * (-(level as f64)).exp2();
        let count = params.center_samples.unwrap_or_else(|| (64usize << level.min(16)).min(2048));
        // Centres of u-balls inside the identity region of the cutoff.
        let centers: Vec<Vec<f64>> = level_centers(&e_norm, u / inner, count, rng::derive_seed(params.seed, level as u64))?
            .into_iter()
            .map(|c| c.into_iter().map(|v| v * inner).collect())
            .collect();
        let ranked = par::map(centers, |c| -> Result<Ranked> {
            let ball = Ball::euclidean(c, u)?;
            let values = sample_on_rule(&big, &ball.center, u, &euclid_rule)?;
            let mut map = p1_of_values(&euclid_rule, &values, f.m(), &ball.center, u);
            let err = residual_error(&euclid_rule, &values, f.target(), &map, &ball.center, u, p);
            map.intercept.iter_mut().zip(&f0).for_each(|(a, z)| *a += z);
            Ok(Ranked { center: ball.center, score: err / u, map })
        });
        let mut ranked = ranked.into_iter().collect::<Result<Vec<_>>>()?;
        ranked.sort_by(|a, b| {
            a.score.total_cmp(&b.score).then_with(|| {
                a.center.iter().zip(&b.center).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        ranked.truncate(params.candidates);

        let rho = u / n as f64;
        let sub_room = (1.0 - 1.0 / n as f64) * u;
        for (k, cand) in ranked.into_iter().enumerate() {
            let norm_ok = op_norm(&cand.map.linear, x_norm, f.target())?.value <= 3.0 * lip * (1.0 + 1e-12);
            let mut subs = vec![cand.center.clone()];
            if sub_room > 0.0 && params.sub_centers > 1 {
                let seed = rng::derive_seed(rng::derive_seed(params.seed, level as u64), k as u64 + 1);
                subs.extend(sample_ball(&Ball::euclidean(cand.center.clone(), sub_room)?, params.sub_centers - 1, seed)?);
            }
            let errs = par::map(subs, |y| -> Result<Candidate> {
                let ball = Ball::new(y, rho, x_norm.clone())?;
                let values = sample_on_rule(f, &ball.center, rho, &x_rule)?;
                let err = ball_error(f, &x_rule, &values, &ball, &cand.map, p) / (rho * lip);
                Ok(Candidate { center: ball.center, map: cand.map.clone(), relative_error: err, norm_ok })
            });
            for c in errs {
                let c = c?;
                let met = |c: &Candidate| c.norm_ok && c.relative_error <= epsilon;
                let replace = match &best {
                    None => true,
                    Some((b, ..)) if met(&c) != met(b) => met(&c),
                    Some((b, ..)) => candidate_order(&c, b).is_lt(),
                };
                if replace {
                    best = Some((c, u, cand.center.clone(), cand.score));
                }
            }
        }
        if let Some((b, ..)) = &best {
            if b.norm_ok && b.relative_error <= epsilon {
                break;
            }
        }
    }

    let (c, u, euclidean_center, normalized_defect) = best.expect("at least one level is scanned");
    let met = c.norm_ok && c.relative_error <= epsilon;
    let witness = BallWitness {
        center: c.center,
        radius: u / n as f64,
        norm: x_norm.clone(),
        map: c.map,
        p,
        relative_error: c.relative_error,
        linear_norm_ok: c.norm_ok,
        lip,
    };
    let validated_relative_error = validate_witness(f, &witness, 8 * params.nodes)?;
    if !met {
        log::warn!("no sub-ball met ε = {epsilon} down to u = {}", params.u_min);
    }
    Ok(PipelineResult {
        witness,
        met,
        u,
        euclidean_center,
        normalized_defect,
        validated_relative_error,
        levels_scanned: scanned,
    })
}
