//! Dyadic scan for the largest sub-ball of `B_X` on which a Lipschitz map
//! admits an `ε`-accurate affine approximation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::affine::{
    fit_values, op_norm, p1_of_values, residual_error, sample_on_rule, AffineMap, BallRule, FitOptions,
    QuadratureConfig,
};
use crate::geometry::{lipschitz_estimate, sample_ball, Ball, Field, GridFunction, NormSpec};
use crate::{par, rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusQuery {
    pub epsilon: f64,
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    /// Smallest radius scanned; levels are `2^{−j} ≥ r_min`.
    pub r_min: f64,
    /// Centres per level; `None` uses `256·2^j` capped at `max_centers`.
    #[serde(default)]
    pub center_samples: Option<usize>,
    #[serde(default = "default_max_centers")]
    pub max_centers: usize,
    /// Quadrature nodes per ball.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Lipschitz constant of the map; estimated from the lattice when absent.
    #[serde(default)]
    pub lip: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_centers() -> usize {
    4096
}
fn default_nodes() -> usize {
    1024
}

impl ModulusQuery {
    pub fn new(epsilon: f64, p: f64, r_min: f64) -> Self {
        ModulusQuery {
            epsilon,
            p,
            r_min,
            center_samples: None,
            max_centers: default_max_centers(),
            nodes: default_nodes(),
            lip: None,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param(format!("ε must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.r_min > 0.0 && self.r_min < 1.0) {
            return Err(Error::param(format!("r_min must lie in (0, 1), got {}", self.r_min)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::param(format!("p must be ≥ 1, got {}", self.p)));
        }
        if self.center_samples == Some(0) || self.max_centers == 0 {
            return Err(Error::param("centre counts must be positive"));
        }
        Ok(())
    }

    fn centers_at(&self, level: u32) -> usize {
        self.center_samples.unwrap_or_else(|| (256usize << level.min(20)).min(self.max_centers))
    }

    pub(crate) fn levels(&self) -> u32 {
        (-self.r_min.log2() + 1e-9).floor() as u32
    }
}

/// A sub-ball together with an affine approximation on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallWitness {
    pub center: Vec<f64>,
    pub radius: f64,
    pub norm: NormSpec,
    #[serde(flatten)]
    pub map: AffineMap,
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    /// `‖f − Λ‖_{L_p(ball)} / (ρ·Lip f)`.
    pub relative_error: f64,
    /// `‖T‖_{X→Y} ≤ 3·Lip f`.
    pub linear_norm_ok: bool,
    pub lip: f64,
}

impl BallWitness {
    pub fn ball(&self) -> Result<Ball> {
        Ball::new(self.center.clone(), self.radius, self.norm.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    pub radius: f64,
    pub centers: usize,
    /// Smallest relative error among maps satisfying the slope constraint.
    pub min_relative_error: f64,
    pub best_center: Vec<f64>,
    pub accepted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusSearch {
    pub epsilon: f64,
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    pub lip: f64,
    pub witness: Option<BallWitness>,
    /// Scanned levels, largest radius first. Without a witness this is an
    /// upper-bound certificate over the scanned balls only.
    pub levels: Vec<LevelRecord>,
}

impl ModulusSearch {
    pub fn radius(&self) -> Option<f64> {
        self.witness.as_ref().map(|w| w.radius)
    }
}

pub(crate) struct Candidate {
    pub center: Vec<f64>,
    pub map: AffineMap,
    pub relative_error: f64,
    pub norm_ok: bool,
}

/// `L_p` error of `map` on a ball from rule samples; for `p = ∞` the lattice
/// nodes inside the ball join the rule nodes.
pub(crate) fn ball_error(
    f: &GridFunction,
    rule: &BallRule,
    values: &[f64],
    ball: &Ball,
    map: &AffineMap,
    p: f64,
) -> f64 {
    let e = residual_error(rule, values, f.target(), map, &ball.center, ball.radius, p);
    if p.is_infinite() {
        e.max(lattice_sup(f, ball, map))
    } else {
        e
    }
}

/// `max ‖f − Λ‖` over lattice nodes of `f` inside `ball`.
pub(crate) fn lattice_sup(f: &GridFunction, ball: &Ball, map: &AffineMap) -> f64 {
    let n = f.dim();
    let (lo, hi) = ball.bounding_box();
    let strides = f.strides();
    let mut ranges = Vec::with_capacity(n);
    for a in 0..n {
        let h = f.spacing(a);
        let last = f.resolution()[a] as f64 - 1.0;
        let i0 = ((lo[a] - f.lower()[a]) / h).ceil().clamp(0.0, last) as usize;
        let i1 = ((hi[a] - f.lower()[a]) / h).floor().clamp(0.0, last) as usize;
        if i1 < i0 {
            return 0.0;
        }
        ranges.push((i0, i1));
    }
    let mut sup = 0.0_f64;
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; f.m()];
    loop {
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        f.node_into(flat, &mut x);
        if ball.contains(&x) {
            map.eval_into(&x, &mut r);
            r.iter_mut().zip(f.value(flat)).for_each(|(a, v)| *a = v - *a);
            sup = sup.max(f.target().norm(&r));
        }
        let mut a = n;
        loop {
            if a == 0 {
                return sup;
            }
            a -= 1;
            if idx[a] < ranges[a].1 {
                idx[a] += 1;
                break;
            }
            idx[a] = ranges[a].0;
        }
    }
}

/// Best `L_p` fit and `P¹` on one ball; the smaller admissible error wins.
fn evaluate_ball(
    f: &GridFunction,
    ball: &Ball,
    p: f64,
    rule: &BallRule,
    opts: &FitOptions,
    lip: f64,
) -> Result<Candidate> {
    let target = f.target();
    let values = sample_on_rule(f, &ball.center, ball.radius, rule)?;
    let fit = fit_values(rule, &values, target, &ball.center, ball.radius, p, opts)?;
    let p1 = p1_of_values(rule, &values, target.m(), &ball.center, ball.radius);
    let scale = ball.radius * lip;
    let mut best: Option<Candidate> = None;
    for map in [fit.map, p1] {
        let err = ball_error(f, rule, &values, ball, &map, p) / scale;
        let norm_ok = op_norm(&map.linear, &ball.norm, target)?.value <= 3.0 * lip * (1.0 + 1e-12);
        let better = match &best {
            None => true,
            Some(b) => (norm_ok, -err) > (b.norm_ok, -b.relative_error),
        };
        if better {
            best = Some(Candidate { center: ball.center.clone(), map, relative_error: err, norm_ok });
        }
    }
    Ok(best.expect("two candidates were evaluated"))
}

/// Orders candidates by error, then lexicographically by centre.
pub(crate) fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.relative_error
        .total_cmp(&b.relative_error)
        .then_with(|| a.center.iter().zip(&b.center).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
}

/// Centres `c` with `c + ρB ⊆ B` for the unit ball `B` of `norm`: the origin
/// followed by seeded samples of `(1 − ρ)B`.
pub(crate) fn level_centers(norm: &NormSpec, radius: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = norm.dim;
    let mut out = vec![vec![0.0; n]];
    let room = 1.0 - radius;
    if room > 1e-12 && count > 1 {
        out.extend(sample_ball(&Ball::new(vec![0.0; n], room, norm.clone())?, count - 1, seed)?);
    }
    Ok(out)
}

/// Scans radii `1, 1/2, 1/4, …` down to `r_min`; at each radius, balls
/// `y + ρB_X ⊆ B_X` are fitted and accepted when the relative error is at
/// most `ε` with `‖T‖ ≤ 3·Lip f`. Stops at the first level with a witness.
pub fn search_modulus(f: &GridFunction, x_norm: &NormSpec, query: &ModulusQuery) -> Result<ModulusSearch> {
    query.validate()?;
    if x_norm.dim != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x_norm.dim });
    }
    let lip = match query.lip {
        Some(l) => l,
        None => lipschitz_estimate(f, x_norm)?,
    };
    let mut levels = Vec::new();
    if !(lip > 0.0) {
        // Constant maps are approximated exactly on the whole ball.
        let n = f.dim();
        let value = f.eval(&vec![0.0; n]);
        let witness = BallWitness {
            center: vec![0.0; n],
            radius: 1.0,
            norm: x_norm.clone(),
            map: AffineMap::constant(value, n),
            p: query.p,
            relative_error: 0.0,
            linear_norm_ok: true,
            lip,
        };
        return Ok(ModulusSearch { epsilon: query.epsilon, p: query.p, lip, witness: Some(witness), levels });
    }
    let rule = BallRule::for_norm(x_norm, &QuadratureConfig { nodes: query.nodes, seed: query.seed })?;
    let opts = FitOptions { quadrature: QuadratureConfig { nodes: query.nodes, seed: query.seed }, ..Default::default() };
    for level in 0..=query.levels() {
        let radius = (-(level as f64)).exp2();
        let centers = level_centers(x_norm, radius, query.centers_at(level), rng::derive_seed(query.seed, level as u64))?;
        let count = centers.len();
        let results = par::map(centers, |c| -> Result<Candidate> {
            let ball = Ball::new(c, radius, x_norm.clone())?;
            evaluate_ball(f, &ball, query.p, &rule, &opts, lip)
        });
        let mut admissible = Vec::with_capacity(count);
        for r in results {
            let c = r?;
            if c.norm_ok {
                admissible.push(c);
            }
        }
        admissible.sort_by(candidate_order);
        let accepted = admissible.iter().filter(|c| c.relative_error <= query.epsilon).count();
        let (min_relative_error, best_center) = admissible
            .first()
            .map_or((f64::INFINITY, Vec::new()), |c| (c.relative_error, c.center.clone()));
        levels.push(LevelRecord { level, radius, centers: count, min_relative_error, best_center, accepted });
        if accepted > 0 {
            let best = admissible.swap_remove(0);
            let witness = BallWitness {
                center: best.center,
                radius,
                norm: x_norm.clone(),
                map: best.map,
                p: query.p,
                relative_error: best.relative_error,
                linear_norm_ok: true,
                lip,
            };
            return Ok(ModulusSearch { epsilon: query.epsilon, p: query.p, lip, witness: Some(witness), levels });
        }
    }
    Ok(ModulusSearch { epsilon: query.epsilon, p: query.p, lip, witness: None, levels })
}

/// Re-evaluates a witness with an independent, denser rule (and every
/// lattice node for `p = ∞`), returning its relative error.
pub fn validate_witness(f: &GridFunction, witness: &BallWitness, nodes: usize) -> Result<f64> {
    let ball = witness.ball()?;
    let (lo, hi) = ball.bounding_box();
    if !f.contains_box(&lo, &hi) {
        return Err(Error::BallOutsideDomain(format!("witness centre {:?}", witness.center)));
    }
    let rule = BallRule::for_norm(&ball.norm, &QuadratureConfig { nodes, seed: 0x0dd5eed })?;
    let values = sample_on_rule(f, &ball.center, ball.radius, &rule)?;
    let err = ball_error(f, &rule, &values, &ball, &witness.map, witness.p);
    Ok(err / (ball.radius * witness.lip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::scalar_field;
    use crate::moduli::{sawtooth_field, SawtoothSpec};

    fn grid2(g: impl Fn(&[f64]) -> f64 + Sync, res: usize) -> GridFunction {
        GridFunction::sample(&scalar_field(2, g), vec![-1.0, -1.0], vec![1.0, 1.0], vec![res, res]).unwrap()
    }

    #[test]
    fn affine_map_is_a_full_ball_witness() {
        let g = grid2(|x| 0.3 + x[0] - 0.5 * x[1], 33);
        let s = search_modulus(&g, &NormSpec::euclidean(2), &ModulusQuery::new(0.1, 2.0, 0.1)).unwrap();
        let w = s.witness.unwrap();
        assert_eq!(w.radius, 1.0);
        assert!(w.relative_error < 1e-10 && w.linear_norm_ok);
    }

    fn sawtooth_grid(m: usize) -> GridFunction {
        let spec = SawtoothSpec::new(m, 2.0).unwrap();
        GridFunction::sample(&sawtooth_field(spec), vec![-1.0], vec![1.0], vec![(1 << (m + 6)) + 1]).unwrap()
    }

    #[test]
    fn sawtooth_has_no_large_witness() {
        let g = sawtooth_grid(2);
        let q = ModulusQuery { center_samples: Some(128), lip: Some(1.0), ..ModulusQuery::new(0.05, f64::INFINITY, 1.0 / 64.0) };
        let s = search_modulus(&g, &NormSpec::euclidean(1), &q).unwrap();
        let w = s.witness.as_ref().expect("locally affine pieces exist");
        assert!(w.radius < 0.25, "{w:?}");
        assert!(s.levels.iter().filter(|l| l.radius >= 0.25).all(|l| l.accepted == 0));
        let v = validate_witness(&g, w, 8192).unwrap();
        assert!((v - w.relative_error).abs() <= 0.01 * w.relative_error.max(1e-12) + 1e-12, "{v} vs {}", w.relative_error);
    }

    #[test]
    fn norm_function_has_off_centre_witness() {
        let g = grid2(|x| x[0].hypot(x[1]), 129);
        let q = ModulusQuery { center_samples: Some(64), lip: Some(1.0), ..ModulusQuery::new(0.2, 2.0, 1.0 / 16.0) };
        let s = search_modulus(&g, &NormSpec::euclidean(2), &q).unwrap();
        let w = s.witness.expect("smooth away from the origin");
        assert!(w.center.iter().any(|c| c.abs() > 1e-9));
        // Doubled sampling never finds a smaller certified radius.
        let q2 = ModulusQuery { center_samples: Some(128), ..q };
        let s2 = search_modulus(&g, &NormSpec::euclidean(2), &q2).unwrap();
        assert!(s2.radius().unwrap() >= w.radius);
    }

    #[test]
    fn stricter_epsilon_never_enlarges_radius() {
        let g = sawtooth_grid(3);
        let mut last = f64::INFINITY;
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let q = ModulusQuery { center_samples: Some(64), lip: Some(1.0), ..ModulusQuery::new(eps, 2.0, 1.0 / 128.0) };
            let r = search_modulus(&g, &NormSpec::euclidean(1), &q).unwrap().radius().unwrap_or(0.0);
            assert!(r <= last, "ε = {eps}: {r} > {last}");
            last = r;
        }
    }
}
