//! Vector-valued fields: the [`Field`] trait, target norms and lattice samples.

use serde::{Deserialize, Serialize};

use super::lp_norm;
use crate::{Error, Result};

/// Exponent used in place of `q = ∞` wherever a smooth surrogate is needed.
pub(crate) const SMOOTH_INF: f64 = 64.0;

/// Norm on the value space `R^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetNorm {
    /// `ℓ_q^m`.
    Lq {
        m: usize,
        #[serde(with = "crate::serde_ext::exponent")]
        q: f64,
    },
    /// `L_q` of the uniform probability measure on `m` points:
    /// `(m⁻¹ Σ |v_i|^q)^{1/q}`.
    Averaged {
        m: usize,
        #[serde(with = "crate::serde_ext::exponent")]
        q: f64,
    },
    /// `ℓ_outer^blocks(ℓ_inner^block_len)`, values stored block by block.
    Mixed {
        blocks: usize,
        block_len: usize,
        #[serde(with = "crate::serde_ext::exponent")]
        inner: f64,
        #[serde(with = "crate::serde_ext::exponent")]
        outer: f64,
    },
}

impl TargetNorm {
    pub fn lq(m: usize, q: f64) -> Self {
        TargetNorm::Lq { m, q }
    }

    pub fn scalar() -> Self {
        TargetNorm::Lq { m: 1, q: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TargetNorm::Lq { m, q } | TargetNorm::Averaged { m, q } => m >= 1 && q >= 1.0,
            TargetNorm::Mixed { blocks, block_len, inner, outer } => {
                blocks >= 1 && block_len >= 1 && inner >= 1.0 && outer >= 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid target norm {self:?}")))
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            TargetNorm::Lq { m, .. } | TargetNorm::Averaged { m, .. } => m,
            TargetNorm::Mixed { blocks, block_len, .. } => blocks * block_len,
        }
    }

    /// Whether the norm is a multiple of the Euclidean one.
    pub fn is_hilbertian(&self) -> bool {
        match *self {
            TargetNorm::Lq { m, q } | TargetNorm::Averaged { m, q } => q == 2.0 || m == 1,
            TargetNorm::Mixed { inner, outer, block_len, blocks } => {
                (inner == 2.0 || block_len == 1) && (outer == 2.0 || blocks == 1)
            }
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match *self {
            TargetNorm::Lq { q, .. } => lp_norm(v, q),
            TargetNorm::Averaged { m, q } => {
                if q.is_infinite() {
                    lp_norm(v, q)
                } else {
                    lp_norm(v, q) / (m as f64).powf(1.0 / q)
                }
            }
            TargetNorm::Mixed { block_len, inner, outer, .. } => {
                let b: Vec<f64> = v.chunks(block_len).map(|c| lp_norm(c, inner)).collect();
                lp_norm(&b, outer)
            }
        }
    }

    /// Per-coordinate factors `g_c / r_c` where `g` is the gradient of the
    /// norm at `r`, with `|r_c|` floored at `delta`. Infinite exponents are
    /// replaced by a large finite one. Used to build reweighted
    /// least-squares weights.
    pub(crate) fn gradient_ratio(&self, r: &[f64], delta: f64, out: &mut [f64]) {
        let fin = |q: f64| if q.is_infinite() { SMOOTH_INF } else { q };
        let floored = |x: f64| x.abs().max(delta);
        match *self {
            TargetNorm::Lq { q, .. } | TargetNorm::Averaged { q, .. } => {
                let q = fin(q);
                let n = lp_norm(r, q).max(delta);
                for (o, x) in out.iter_mut().zip(r) {
                    *o = floored(*x).powf(q - 2.0) / n.powf(q - 1.0);
                }
                if let TargetNorm::Averaged { m, .. } = *self {
                    let c = (m as f64).powf(-1.0 / q);
                    out.iter_mut().for_each(|o| *o *= c);
                }
            }
            TargetNorm::Mixed { block_len, inner, outer, .. } => {
                let (qi, qo) = (fin(inner), fin(outer));
                let blocks: Vec<f64> = r.chunks(block_len).map(|c| lp_norm(c, qi).max(delta)).collect();
                let n = lp_norm(&blocks, qo).max(delta);
                for (k, (oc, rc)) in out.chunks_mut(block_len).zip(r.chunks(block_len)).enumerate() {
                    let b = blocks[k];
                    for (o, x) in oc.iter_mut().zip(rc) {
                        *o = n.powf(1.0 - qo) * b.powf(qo - qi) * floored(*x).powf(qi - 2.0);
                    }
                }
            }
        }
    }

    /// A norming functional for `v`: `g` with `‖g‖_* = 1` and `⟨g, v⟩ = ‖v‖`
    /// (up to the smoothing of infinite exponents).
    pub(crate) fn norming_functional(&self, v: &[f64]) -> Vec<f64> {
        let n = self.norm(v);
        let mut g = vec![0.0; v.len()];
        if n == 0.0 {
            return g;
        }
        let exact_sup = match *self {
            TargetNorm::Lq { q, .. } | TargetNorm::Averaged { q, .. } => q.is_infinite(),
            TargetNorm::Mixed { inner, outer, .. } => inner.is_infinite() && outer.is_infinite(),
        };
        if exact_sup {
            let (i, x) = v
                .iter()
                .enumerate()
                .fold((0, 0.0_f64), |b, (i, x)| if x.abs() > b.1.abs() { (i, *x) } else { b });
            g[i] = x.signum();
            return g;
        }
        self.gradient_ratio(v, 0.0, &mut g);
        for (gi, vi) in g.iter_mut().zip(v) {
            *gi *= vi;
            if !gi.is_finite() {
                *gi = 0.0;
            }
        }
        g
    }
}

/// A map `R^n ⊇ domain → (R^m, target)`.
pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn target(&self) -> &TargetNorm;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    /// Axis-aligned box on which the field is defined, if bounded.
    fn domain(&self) -> Option<(&[f64], &[f64])> {
        None
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.target().m()];
        self.eval_into(x, &mut out);
        out
    }

    /// Whether the axis-aligned box `[lo, hi]` lies in the domain.
    fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        match self.domain() {
            None => true,
            Some((dl, du)) => lo.iter().zip(hi).zip(dl.iter().zip(du)).all(|((a, b), (l, u))| {
                let slack = 1e-12 * (u - l).abs().max(1.0);
                *a >= l - slack && *b <= u + slack
            }),
        }
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn target(&self) -> &TargetNorm {
        (**self).target()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn domain(&self) -> Option<(&[f64], &[f64])> {
        (**self).domain()
    }
}

impl<T: Field + ?Sized + Send> Field for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn target(&self) -> &TargetNorm {
        (**self).target()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn domain(&self) -> Option<(&[f64], &[f64])> {
        (**self).domain()
    }
}

/// A field given by a closure writing into an output slice.
pub struct FnField<F> {
    dim: usize,
    target: TargetNorm,
    f: F,
    domain: Option<(Vec<f64>, Vec<f64>)>,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnField<F> {
    pub fn new(dim: usize, target: TargetNorm, f: F) -> Self {
        FnField { dim, target, f, domain: None }
    }

    pub fn with_domain(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.domain = Some((lower, upper));
        self
    }
}

/// Scalar field from `g: R^n → R` (target `ℓ_2^1`).
pub fn scalar_field<G>(dim: usize, g: G) -> FnField<impl Fn(&[f64], &mut [f64]) + Sync>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    FnField::new(dim, TargetNorm::scalar(), move |x: &[f64], out: &mut [f64]| out[0] = g(x))
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn target(&self) -> &TargetNorm {
        &self.target
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
    fn domain(&self) -> Option<(&[f64], &[f64])> {
        self.domain.as_ref().map(|(l, u)| (l.as_slice(), u.as_slice()))
    }
}

impl FnField<()> {
    /// Scalar field from `g: R^n → R` (target `ℓ_2^1`).
    pub fn scalar<G>(dim: usize, g: G) -> FnField<impl Fn(&[f64], &mut [f64]) + Sync>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        scalar_field(dim, g)
    }
}

/// Values of a field on a regular lattice over a box.
///
/// Nodes are stored row-major with the last axis varying fastest; each node
/// holds `m` consecutive values.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
    values: Vec<f64>,
    target: TargetNorm,
}

impl GridFunction {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: Vec<usize>,
        values: Vec<f64>,
        target: TargetNorm,
    ) -> Result<Self> {
        validate_lattice(&lower, &upper, &resolution)?;
        target.validate()?;
        let nodes: usize = resolution.iter().product();
        if values.len() != nodes * target.m() {
            return Err(Error::DimensionMismatch { expected: nodes * target.m(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite value at flat index {i}")));
        }
        Ok(GridFunction { lower, upper, resolution, values, target })
    }

    /// Sample a field on the lattice.
    pub fn sample<F: Field + ?Sized>(
        f: &F,
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: Vec<usize>,
    ) -> Result<Self> {
        validate_lattice(&lower, &upper, &resolution)?;
        if f.dim() != lower.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: f.dim() });
        }
        let m = f.target().m();
        let mut g = GridFunction { lower, upper, resolution, values: vec![], target: f.target().clone() };
        let mut values = vec![0.0; g.len() * m];
        let mut x = vec![0.0; g.dim()];
        for (i, chunk) in values.chunks_mut(m).enumerate() {
            g.node_into(i, &mut x);
            f.eval_into(&x, chunk);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("field produced a non-finite value at node {}", i / m)));
        }
        g.values = values;
        Ok(g)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.target.m()
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn target(&self) -> &TargetNorm {
        &self.target
    }

    /// Number of lattice nodes.
    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.resolution[axis] - 1) as f64
    }

    /// Flat-index stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1; n];
        for a in (0..n.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.resolution[a + 1];
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.resolution[a];
            flat /= self.resolution[a];
        }
        idx
    }

    pub fn node_into(&self, flat: usize, x: &mut [f64]) {
        let mut f = flat;
        for a in (0..self.dim()).rev() {
            let i = f % self.resolution[a];
            f /= self.resolution[a];
            x[a] = self.coord(a, i);
        }
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.node_into(flat, &mut x);
        x
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let r = self.resolution[axis] - 1;
        if i == r {
            self.upper[axis]
        } else {
            self.lower[axis] + (self.upper[axis] - self.lower[axis]) * i as f64 / r as f64
        }
    }

    pub fn value(&self, flat: usize) -> &[f64] {
        let m = self.m();
        &self.values[flat * m..(flat + 1) * m]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Evaluate `g` on the lattice with this grid's geometry.
    pub fn map_values(&self, target: TargetNorm, g: impl Fn(&[f64], &[f64], &mut [f64])) -> Result<Self> {
        let m_out = target.m();
        let mut values = vec![0.0; self.len() * m_out];
        let mut x = vec![0.0; self.dim()];
        for (i, out) in values.chunks_mut(m_out).enumerate() {
            self.node_into(i, &mut x);
            g(&x, self.value(i), out);
        }
        GridFunction::new(self.lower.clone(), self.upper.clone(), self.resolution.clone(), values, target)
    }
}

fn validate_lattice(lower: &[f64], upper: &[f64], resolution: &[usize]) -> Result<()> {
    let n = lower.len();
    if n == 0 || upper.len() != n || resolution.len() != n {
        return Err(Error::param("box corners and resolution must share a positive dimension"));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
        return Err(Error::param("box must satisfy lower < upper on every axis"));
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(Error::param("resolution must be at least 2 per axis"));
    }
    Ok(())
}

impl Field for GridFunction {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn target(&self) -> &TargetNorm {
        &self.target
    }

    fn domain(&self) -> Option<(&[f64], &[f64])> {
        Some((&self.lower, &self.upper))
    }

    /// Multilinear interpolation; points outside the box are clamped.
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let m = self.m();
        let strides = self.strides();
        let mut base = 0usize;
        let mut frac = [0.0_f64; 16];
        let mut step = [0usize; 16];
        assert!(n <= 16, "interpolation supports up to 16 axes");
        for a in 0..n {
            let r = self.resolution[a] - 1;
            let t = ((x[a] - self.lower[a]) / (self.upper[a] - self.lower[a]) * r as f64).clamp(0.0, r as f64);
            let i = (t.floor() as usize).min(r - 1);
            frac[a] = t - i as f64;
            step[a] = strides[a];
            base += i * strides[a];
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = base;
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    flat += step[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                let v = &self.values[flat * m..(flat + 1) * m];
                out.iter_mut().zip(v).for_each(|(o, v)| *o += w * v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolation_reproduces_multilinear_functions() {
        let f = FnField::new(2, TargetNorm::lq(2, 2.0), |x: &[f64], o: &mut [f64]| {
            o[0] = 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
            o[1] = x[1];
        });
        let g = GridFunction::sample(&f, vec![-1.0, 0.0], vec![1.0, 2.0], vec![5, 9]).unwrap();
        for x in [[0.13, 0.77], [-0.99, 1.999], [1.0, 2.0], [0.0, 0.0]] {
            let (a, b) = (g.eval(&x), f.eval(&x));
            assert_relative_eq!(a[0], b[0], epsilon = 1e-13);
            assert_relative_eq!(a[1], b[1], epsilon = 1e-13);
        }
    }

    #[test]
    fn layout_is_row_major_last_axis_fastest() {
        let f = FnField::new(2, TargetNorm::scalar(), |x: &[f64], o: &mut [f64]| o[0] = 10.0 * x[0] + x[1]);
        let g = GridFunction::sample(&f, vec![0.0, 0.0], vec![2.0, 3.0], vec![3, 4]).unwrap();
        assert_eq!(g.value(1), &[1.0]);
        assert_eq!(g.value(4), &[10.0]);
        assert_eq!(g.multi_index(7), vec![1, 3]);
        assert_eq!(g.strides(), vec![4, 1]);
    }

    #[test]
    fn grid_validation() {
        let t = TargetNorm::scalar();
        assert!(GridFunction::new(vec![0.0], vec![1.0], vec![1], vec![0.0], t.clone()).is_err());
        assert!(GridFunction::new(vec![0.0], vec![1.0], vec![2], vec![0.0, f64::NAN], t.clone()).is_err());
        assert!(GridFunction::new(vec![1.0], vec![0.0], vec![2], vec![0.0, 0.0], t.clone()).is_err());
        assert!(GridFunction::new(vec![0.0], vec![1.0], vec![2], vec![0.0, 0.0], TargetNorm::lq(0, 2.0)).is_err());
        assert!(GridFunction::new(vec![0.0], vec![1.0], vec![2], vec![0.0, 0.0], t).is_ok());
    }

    #[test]
    fn target_norms() {
        assert_relative_eq!(TargetNorm::lq(2, 2.0).norm(&[3.0, 4.0]), 5.0);
        assert_relative_eq!(TargetNorm::Averaged { m: 4, q: 2.0 }.norm(&[2.0; 4]), 2.0);
        let mixed = TargetNorm::Mixed { blocks: 2, block_len: 2, inner: 1.0, outer: 2.0 };
        assert_relative_eq!(mixed.norm(&[1.0, 2.0, -4.0, 0.0]), 5.0);
    }

    #[test]
    fn norming_functional_attains_norm() {
        let targets = [
            TargetNorm::lq(3, 2.0),
            TargetNorm::lq(3, 3.0),
            TargetNorm::lq(3, f64::INFINITY),
            TargetNorm::Averaged { m: 3, q: 1.5 },
        ];
        let v = [0.3, -1.2, 0.7];
        for t in &targets {
            let g = t.norming_functional(&v);
            let pairing: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert_relative_eq!(pairing, t.norm(&v), max_relative = 1e-12);
        }
    }

    #[test]
    fn target_json() {
        let t: TargetNorm = serde_json::from_str(r#"{"kind":"lq","m":3,"q":"inf"}"#).unwrap();
        assert_eq!(t, TargetNorm::lq(3, f64::INFINITY));
    }
}
