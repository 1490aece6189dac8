//! Multi-band sawtooth maps into `ℓ_p^m`, their coordinate-rescaled tensor
//! stack, and the dyadic table certifying that they are far from affine on
//! every long enough interval.

use serde::{Deserialize, Serialize};

use crate::affine::{best_affine, FitReport};
use crate::geometry::{Ball, FnField, TargetNorm};
use crate::{par, Error, Result};

/// The 2-periodic tent: `0` on even integers, `1` on odd ones, linear between.
pub fn tent(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r <= 1.0 {
        r
    } else {
        2.0 - r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SawtoothSpec {
    pub m: usize,
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
}

impl SawtoothSpec {
    pub fn new(m: usize, p: f64) -> Result<Self> {
        let s = SawtoothSpec { m, p };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > 60 {
            return Err(Error::param(format!("band count must lie in 1..=60, got {}", self.m)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::param(format!("target exponent must be ≥ 1, got {}", self.p)));
        }
        Ok(())
    }

    pub fn target(&self) -> TargetNorm {
        TargetNorm::lq(self.m, self.p)
    }
}

/// `m^{−1/p} Σ_k φ(2^k x) 2^{−k} e_k`, written into `out[..m]`.
pub fn sawtooth_into(spec: &SawtoothSpec, x: f64, out: &mut [f64]) {
    let scale = if spec.p.is_infinite() { 1.0 } else { (spec.m as f64).powf(-1.0 / spec.p) };
    let mut t = 1.0;
    for o in out.iter_mut().take(spec.m) {
        t *= 2.0;
        *o = scale * tent(t * x) / t;
    }
}

pub fn sawtooth_f(spec: &SawtoothSpec, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; spec.m];
    sawtooth_into(spec, x, &mut out);
    out
}

/// The sawtooth as a field on `R`.
pub fn sawtooth_field(spec: SawtoothSpec) -> FnField<impl Fn(&[f64], &mut [f64]) + Sync> {
    FnField::new(1, spec.target(), move |x: &[f64], out: &mut [f64]| sawtooth_into(&spec, x[0], out))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub n: usize,
    pub m: usize,
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    /// The constant `K` of the scale `e^{(K/ε)^p}`.
    pub k: f64,
    pub epsilon: f64,
}

impl TensorSpec {
    /// Per-axis scale `s = e^{(K/ε)^p}`.
    pub fn scale_exponent(&self) -> f64 {
        (self.k / self.epsilon).powf(self.p)
    }

    pub fn validate(&self) -> Result<()> {
        SawtoothSpec { m: self.m, p: self.p }.validate()?;
        if self.n == 0 {
            return Err(Error::param("tensor dimension must be positive"));
        }
        if !(self.k > 0.0 && self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param(format!("need K > 0 and ε ∈ (0, 1), got K = {}, ε = {}", self.k, self.epsilon)));
        }
        if self.p.is_infinite() {
            return Err(Error::param("tensor exponent must be finite"));
        }
        let top = (self.n - 1) as f64 * self.scale_exponent();
        if !top.exp().is_finite() {
            return Err(Error::Overflow(format!("scale e^{top} is not representable")));
        }
        Ok(())
    }

    /// `ℓ_2^n(ℓ_p^m)`.
    pub fn target(&self) -> TargetNorm {
        TargetNorm::Mixed { blocks: self.n, block_len: self.m, inner: self.p, outer: 2.0 }
    }
}

/// `(f(x₁), f(s x₂)/s, …, f(s^{n−1} x_n)/s^{n−1})` with `f` the sawtooth.
pub fn tensor_f(spec: &TensorSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if x.len() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, got: x.len() });
    }
    let mut out = vec![0.0; spec.n * spec.m];
    tensor_into(spec, x, &mut out);
    Ok(out)
}

fn tensor_into(spec: &TensorSpec, x: &[f64], out: &mut [f64]) {
    let saw = SawtoothSpec { m: spec.m, p: spec.p };
    let e = spec.scale_exponent();
    for (j, block) in out.chunks_mut(spec.m).enumerate() {
        let s = (j as f64 * e).exp();
        sawtooth_into(&saw, s * x[j], block);
        block.iter_mut().for_each(|v| *v /= s);
    }
}

pub fn tensor_field(spec: TensorSpec) -> Result<FnField<impl Fn(&[f64], &mut [f64]) + Sync>> {
    spec.validate()?;
    Ok(FnField::new(spec.n, spec.target(), move |x: &[f64], out: &mut [f64]| tensor_into(&spec, x, out)))
}

/// One dyadic interval of the certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub level: u32,
    pub a: f64,
    pub b: f64,
    /// Best affine error, `(1/(b−a)∫‖f − Λ‖^q)^{1/q}`.
    pub error: f64,
    /// `η m^{−1/p} (b − a)/2`.
    pub bound: f64,
    /// `error / (m^{−1/p}(b − a)/2)`, to be compared with `η`.
    pub normalized: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub m: usize,
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    #[serde(with = "crate::serde_ext::exponent")]
    pub q: f64,
    /// Baseline measured on `[−1, 1]` with a single band.
    pub eta: f64,
    pub rows: Vec<IntervalRow>,
    pub violations: usize,
    /// Extremes of `normalized / η` over the table (1 when the table is empty).
    pub min_scaling: f64,
    pub max_scaling: f64,
}

/// Relative slack below which a shortfall counts as a violation.
const CERT_TOL: f64 = 1e-6;

/// Best `L_q` error of the single-band sawtooth on `[−1, 1]`.
pub fn sawtooth_eta(p: f64, q: f64) -> Result<f64> {
    let spec = SawtoothSpec::new(1, p)?;
    Ok(interval_fit(spec, -1.0, 1.0, q)?.error)
}

fn interval_fit(spec: SawtoothSpec, a: f64, b: f64, q: f64) -> Result<FitReport> {
    let field = sawtooth_field(spec);
    best_affine(&field, &Ball::euclidean(vec![0.5 * (a + b)], 0.5 * (b - a))?, q)
}

/// Fits the sawtooth on every dyadic interval of `[−1, 1]` down to level
/// `depth` whose half-length is at least `4·2^{−m}`, and checks each error
/// against `η m^{−1/p}(b − a)/2` with `η` from the single-band baseline.
pub fn certify_upper_bound(spec: SawtoothSpec, q: f64, depth: u32) -> Result<Certificate> {
    spec.validate()?;
    if !(q >= 1.0) {
        return Err(Error::param(format!("fit exponent must be ≥ 1, got {q}")));
    }
    if depth as usize > spec.m + 2 {
        return Err(Error::param(format!("depth {depth} exceeds m + 2 = {}", spec.m + 2)));
    }
    let eta = sawtooth_eta(spec.p, q)?;
    let band = if spec.p.is_infinite() { 1.0 } else { (spec.m as f64).powf(-1.0 / spec.p) };
    let threshold = 4.0 * (-(spec.m as f64)).exp2();
    let mut intervals = Vec::new();
    for level in 0..=depth {
        let len = 2.0 * (-(level as f64)).exp2();
        if len / 2.0 < threshold * (1.0 - 1e-12) {
            break;
        }
        for i in 0..1u64 << level {
            let a = -1.0 + i as f64 * len;
            intervals.push((level, a, a + len));
        }
    }
    let fits = par::map(intervals, |(level, a, b)| interval_fit(spec, a, b, q).map(|r| (level, a, b, r.error)));
    let mut rows = Vec::with_capacity(fits.len());
    for fit in fits {
        let (level, a, b, error) = fit?;
        let half = 0.5 * (b - a);
        let bound = eta * band * half;
        let normalized = error / (band * half);
        rows.push(IntervalRow { level, a, b, error, bound, normalized, violation: error < bound * (1.0 - CERT_TOL) });
    }
    let violations = rows.iter().filter(|r| r.violation).count();
    let (min_scaling, max_scaling) = if rows.is_empty() {
        (1.0, 1.0)
    } else {
        rows.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r.normalized / eta), hi.max(r.normalized / eta)))
    };
    Ok(Certificate { m: spec.m, p: spec.p, q, eta, rows, violations, min_scaling, max_scaling })
}
