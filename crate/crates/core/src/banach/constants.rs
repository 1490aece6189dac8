//! Lower bounds for UMD, type and cotype constants by exhaustive sign
//! enumeration.

use serde::{Deserialize, Serialize};

use super::martingale::DyadicMartingale;
use crate::geometry::TargetNorm;
use crate::{par, rng, serde_ext, Error, Result};

/// Deepest martingale for which all `2^k` sign patterns are enumerated.
pub const MAX_ENUM_DEPTH: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    BetaP,
    BetaPPlus,
    BetaPMinus,
    CotypeQ,
    TypeP,
}

/// What achieved an estimate, in enough detail to recompute it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Member `member` of a [`MartingaleFamily`] at `depth`; `signs` is empty
    /// for the sign-averaged one-sided constants.
    Martingale { seed: u64, member: usize, depth: usize, signs: Vec<i8> },
    /// An explicitly supplied martingale and sign pattern.
    Signs { signs: Vec<i8> },
    Vectors { vectors: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub kind: ConstantKind,
    #[serde(with = "serde_ext::exponent")]
    pub p_or_q: f64,
    /// A lower bound for the constant.
    pub value: f64,
    pub depth: usize,
    pub witness: Witness,
}

/// Seeded Gaussian martingales: member `i` at depth `d` is drawn from seed
/// `derive(derive(seed, d), i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleFamily {
    pub target: TargetNorm,
    pub members: usize,
    #[serde(default)]
    pub seed: u64,
}

impl MartingaleFamily {
    pub fn new(target: TargetNorm, members: usize, seed: u64) -> Self {
        MartingaleFamily { target, members, seed }
    }

    pub fn member(&self, depth: usize, index: usize) -> Result<DyadicMartingale> {
        let seed = rng::derive_seed(rng::derive_seed(self.seed, depth as u64), index as u64);
        DyadicMartingale::random(self.target.clone(), depth, seed)
    }
}

/// `max{p, p/(p−1)} − 1`, the scalar UMD constant.
pub fn burkholder_constant(p: f64) -> f64 {
    p.max(p / (p - 1.0)) - 1.0
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must lie in (1, ∞), got {p}")));
    }
    Ok(())
}

fn mask_of(signs: &[i8]) -> Result<u64> {
    let mut mask = 0;
    for (j, &s) in signs.iter().enumerate() {
        match s {
            1 => {}
            -1 => mask |= 1 << j,
            _ => return Err(Error::param(format!("sign {s} is not ±1"))),
        }
    }
    Ok(mask)
}

fn signs_of(mask: u64, depth: usize) -> Vec<i8> {
    (0..depth).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }).collect()
}

/// `(E‖M_0 + Σ ε_j dM_j‖^p / E‖M_k‖^p)^{1/p}` with exact leaf averages; a
/// trivial martingale gives 1.
pub fn umd_ratio(mart: &DyadicMartingale, signs: &[i8], p: f64) -> Result<f64> {
    if signs.len() != mart.depth() {
        return Err(Error::DimensionMismatch { expected: mart.depth(), got: signs.len() });
    }
    check_p(p)?;
    Ok(ratio(mart.transform_moment(mask_of(signs)?, p), mart.terminal_moment(p), p))
}

fn ratio(num: f64, den: f64, p: f64) -> f64 {
    if den == 0.0 {
        1.0
    } else {
        (num / den).powf(1.0 / p)
    }
}

/// Transform moments for every sign pattern, indexed by the mask of
/// negative signs.
fn all_moments(mart: &DyadicMartingale, p: f64) -> Result<Vec<f64>> {
    let k = mart.depth();
    if k > MAX_ENUM_DEPTH {
        return Err(Error::param(format!("depth {k} exceeds {MAX_ENUM_DEPTH} for exhaustive enumeration")));
    }
    Ok(par::map((0..1u64 << k).collect(), |mask| mart.transform_moment(mask, p)))
}

/// The three sign-based estimates for one martingale.
pub struct UmdEstimates {
    /// `max_ε` ratio and the maximising mask (lowest mask on ties).
    pub beta: (f64, u64),
    /// `(E_ε E‖·‖^p / E‖M_k‖^p)^{1/p}`.
    pub plus: f64,
    /// `(E‖M_k‖^p / E_ε E‖·‖^p)^{1/p}`.
    pub minus: f64,
}

pub fn umd_estimates(mart: &DyadicMartingale, p: f64) -> Result<UmdEstimates> {
    check_p(p)?;
    let moments = all_moments(mart, p)?;
    let den = mart.terminal_moment(p);
    let mut beta = (f64::NEG_INFINITY, 0);
    for (mask, &m) in moments.iter().enumerate() {
        let r = ratio(m, den, p);
        if r > beta.0 {
            beta = (r, mask as u64);
        }
    }
    let avg = moments.iter().sum::<f64>() / moments.len() as f64;
    Ok(UmdEstimates { beta, plus: ratio(avg, den, p), minus: ratio(den, avg, p) })
}

/// Supremum of [`umd_ratio`] over every sign pattern for one martingale.
pub fn beta_for_martingale(mart: &DyadicMartingale, p: f64) -> Result<ConstantEstimate> {
    let e = umd_estimates(mart, p)?;
    Ok(ConstantEstimate {
        kind: ConstantKind::BetaP,
        p_or_q: p,
        value: e.beta.0,
        depth: mart.depth(),
        witness: Witness::Signs { signs: signs_of(e.beta.1, mart.depth()) },
    })
}

/// Lower bounds for `β_p`, `β_p^+` and `β_p^-` from every member of
/// `family` at every depth `1..=k_max`, returned in that order.
///
/// Taking the supremum over all depths up to `k_max` makes each estimate
/// non-decreasing in `k_max`.
pub fn umd_lower_bounds(family: &MartingaleFamily, p: f64, k_max: usize) -> Result<[ConstantEstimate; 3]> {
    Ok(umd_depth_trace(family, p, k_max)?.pop().expect("k_max ≥ 1"))
}

/// The bounds of [`umd_lower_bounds`] for every `k_max` from 1 up to the
/// given one.
pub fn umd_depth_trace(family: &MartingaleFamily, p: f64, k_max: usize) -> Result<Vec<[ConstantEstimate; 3]>> {
    check_p(p)?;
    if k_max == 0 || k_max > MAX_ENUM_DEPTH {
        return Err(Error::param(format!("k_max must lie in 1..={MAX_ENUM_DEPTH}, got {k_max}")));
    }
    if family.members == 0 {
        return Err(Error::param("family has no members"));
    }
    let trivial = |kind| ConstantEstimate {
        kind,
        p_or_q: p,
        value: 1.0,
        depth: 0,
        witness: Witness::Martingale { seed: family.seed, member: 0, depth: 0, signs: vec![] },
    };
    let mut out = [trivial(ConstantKind::BetaP), trivial(ConstantKind::BetaPPlus), trivial(ConstantKind::BetaPMinus)];
    let mut trace = Vec::with_capacity(k_max);
    for depth in 1..=k_max {
        for member in 0..family.members {
            let e = umd_estimates(&family.member(depth, member)?, p)?;
            let found = [(e.beta.0, signs_of(e.beta.1, depth)), (e.plus, vec![]), (e.minus, vec![])];
            for (slot, (value, signs)) in out.iter_mut().zip(found) {
                if value > slot.value {
                    slot.value = value;
                    slot.depth = depth;
                    slot.witness = Witness::Martingale { seed: family.seed, member, depth, signs };
                }
            }
        }
        trace.push(out.clone());
    }
    Ok(trace)
}

/// Lower bound for `β_p` over `family` and depths up to `k_max`.
pub fn beta_lower_bound(family: &MartingaleFamily, p: f64, k_max: usize) -> Result<ConstantEstimate> {
    let [beta, ..] = umd_lower_bounds(family, p, k_max)?;
    Ok(beta)
}

/// Recomputes an estimate from its witness.
pub fn reevaluate(estimate: &ConstantEstimate, family: &MartingaleFamily) -> Result<f64> {
    match (&estimate.witness, estimate.kind) {
        (Witness::Martingale { member, depth, seed, signs }, kind) => {
            if *seed != family.seed {
                return Err(Error::param("witness was produced by a different family seed"));
            }
            if *depth == 0 {
                return Ok(1.0);
            }
            let mart = family.member(*depth, *member)?;
            match kind {
                ConstantKind::BetaP => umd_ratio(&mart, signs, estimate.p_or_q),
                ConstantKind::BetaPPlus => Ok(umd_estimates(&mart, estimate.p_or_q)?.plus),
                ConstantKind::BetaPMinus => Ok(umd_estimates(&mart, estimate.p_or_q)?.minus),
                _ => Err(Error::param("martingale witness for a type/cotype estimate")),
            }
        }
        (Witness::Vectors { vectors }, ConstantKind::CotypeQ) => {
            Ok(cotype_constant(vectors, &family.target, estimate.p_or_q)?.value)
        }
        (Witness::Vectors { vectors }, ConstantKind::TypeP) => {
            Ok(type_constant(vectors, &family.target, estimate.p_or_q)?.value)
        }
        _ => Err(Error::param("witness does not match the estimate kind")),
    }
}

/// `(Σ‖x_j‖^q)^{1/q}` and `E_ε‖Σ ε_j x_j‖` by exact enumeration.
fn rademacher_pair(vectors: &[Vec<f64>], target: &TargetNorm, exponent: f64) -> Result<(f64, f64)> {
    let count = vectors.len();
    if count == 0 || count > 16 {
        return Err(Error::param(format!("between 1 and 16 vectors are supported, got {count}")));
    }
    if !(exponent >= 1.0) {
        return Err(Error::param(format!("exponent must be ≥ 1, got {exponent}")));
    }
    let m = target.m();
    if let Some(v) = vectors.iter().find(|v| v.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: v.len() });
    }
    let norms: Vec<f64> = vectors.iter().map(|v| target.norm(v)).collect();
    if norms.iter().all(|&n| n == 0.0) {
        return Err(Error::param("all vectors are zero"));
    }
    let power = crate::geometry::lp_norm(&norms, exponent);
    // ε_1 = +1 without loss of generality: the norm is even.
    let half = 1u32 << (count - 1);
    let sums = par::map((0..half).collect(), |mask| {
        let mut s = vectors[0].clone();
        for (j, v) in vectors.iter().enumerate().skip(1) {
            let sign = if mask >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 };
            s.iter_mut().zip(v).for_each(|(a, b)| *a += sign * b);
        }
        target.norm(&s)
    });
    Ok((power, sums.iter().sum::<f64>() / half as f64))
}

/// `(Σ‖x_j‖^q)^{1/q} / E‖Σ ε_j x_j‖`, a lower bound for the cotype-`q`
/// constant of the target.
pub fn cotype_constant(vectors: &[Vec<f64>], target: &TargetNorm, q: f64) -> Result<ConstantEstimate> {
    let (power, mean) = rademacher_pair(vectors, target, q)?;
    Ok(ConstantEstimate {
        kind: ConstantKind::CotypeQ,
        p_or_q: q,
        value: power / mean,
        depth: vectors.len(),
        witness: Witness::Vectors { vectors: vectors.to_vec() },
    })
}

/// `E‖Σ ε_j x_j‖ / (Σ‖x_j‖^p)^{1/p}`, a lower bound for the type-`p`
/// constant of the target.
pub fn type_constant(vectors: &[Vec<f64>], target: &TargetNorm, p: f64) -> Result<ConstantEstimate> {
    let (power, mean) = rademacher_pair(vectors, target, p)?;
    Ok(ConstantEstimate {
        kind: ConstantKind::TypeP,
        p_or_q: p,
        value: mean / power,
        depth: vectors.len(),
        witness: Witness::Vectors { vectors: vectors.to_vec() },
    })
}
