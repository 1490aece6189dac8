//! Finite-dimensional norms with closed-form Euclidean sandwich constants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::lp_norm;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum NormKind {
    Lp { p: f64 },
    /// `‖x‖ = sqrt(xᵀ A x)` for symmetric positive definite `A`.
    Ellipsoid { matrix: Vec<Vec<f64>> },
}

/// A norm on `R^dim`, optionally multiplied by a positive `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormRepr", into = "NormRepr")]
pub struct NormSpec {
    pub kind: NormKind,
    pub dim: usize,
    pub scale: f64,
    /// Eigen-decomposition cache for ellipsoids: (λ_min, λ_max, A^{-1/2}).
    ellipsoid: Option<EllipsoidData>,
}

#[derive(Clone, Debug, PartialEq)]
struct EllipsoidData {
    lambda_min: f64,
    lambda_max: f64,
    inv_sqrt: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormRepr {
    kind: String,
    #[serde(default, with = "crate::serde_ext::exponent_opt", skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    dim: usize,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<NormRepr> for NormSpec {
    type Error = Error;

    fn try_from(r: NormRepr) -> Result<Self> {
        let spec = match r.kind.as_str() {
            "lp" => {
                let p = r.p.ok_or_else(|| Error::param("lp norm needs `p`"))?;
                if r.matrix.is_some() {
                    return Err(Error::param("lp norm takes no `matrix`"));
                }
                NormSpec::lp(p, r.dim)?
            }
            "ellipsoid" => {
                let m = r.matrix.ok_or_else(|| Error::param("ellipsoid norm needs `matrix`"))?;
                if r.p.is_some() {
                    return Err(Error::param("ellipsoid norm takes no `p`"));
                }
                let spec = NormSpec::ellipsoid(m)?;
                if spec.dim != r.dim {
                    return Err(Error::DimensionMismatch { expected: r.dim, got: spec.dim });
                }
                spec
            }
            other => return Err(Error::param(format!("unknown norm kind `{other}`"))),
        };
        spec.scaled(r.scale)
    }
}

impl From<NormSpec> for NormRepr {
    fn from(s: NormSpec) -> Self {
        let (kind, p, matrix) = match s.kind {
            NormKind::Lp { p } => ("lp", Some(p), None),
            NormKind::Ellipsoid { matrix } => ("ellipsoid", None, Some(matrix)),
        };
        NormRepr { kind: kind.into(), p, matrix, dim: s.dim, scale: s.scale }
    }
}

impl NormSpec {
    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::param(format!("lp exponent must be ≥ 1, got {p}")));
        }
        if dim == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        Ok(NormSpec { kind: NormKind::Lp { p }, dim, scale: 1.0, ellipsoid: None })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::lp(2.0, dim).expect("positive dimension")
    }

    pub fn ellipsoid(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::param("ellipsoid matrix must be square and non-empty"));
        }
        let a = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::param("ellipsoid matrix has non-finite entries"));
        }
        let tol = 1e-12 * a.amax().max(1.0);
        if (0..n).any(|i| (0..n).any(|j| (a[(i, j)] - a[(j, i)]).abs() > tol)) {
            return Err(Error::param("ellipsoid matrix must be symmetric"));
        }
        let eig = SymmetricEigen::new(a);
        let lambda_min = eig.eigenvalues.min();
        let lambda_max = eig.eigenvalues.max();
        if !(lambda_min > 0.0) {
            return Err(Error::param(format!(
                "ellipsoid matrix must be positive definite (smallest eigenvalue {lambda_min:e})"
            )));
        }
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let inv_sqrt = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        Ok(NormSpec {
            kind: NormKind::Ellipsoid { matrix },
            dim: n,
            scale: 1.0,
            ellipsoid: Some(EllipsoidData { lambda_min, lambda_max, inv_sqrt }),
        })
    }

    /// The same norm multiplied by `factor > 0`.
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::param(format!("norm scale must be positive, got {factor}")));
        }
        self.scale *= factor;
        Ok(self)
    }

    /// Rescaled so that `‖x‖₂ ≤ ‖x‖ ≤ c·‖x‖₂` with `c ≤ √n`.
    pub fn john_normalized(&self) -> Self {
        let (lo, _) = euclid_sandwich(self);
        self.clone().scaled(1.0 / lo).expect("sandwich constant is positive")
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, NormKind::Lp { p } if p == 2.0)
    }

    /// Whether the unit ball is a linear image of the Euclidean ball.
    pub fn is_ellipsoidal(&self) -> bool {
        self.is_euclidean() || self.dim == 1 || matches!(self.kind, NormKind::Ellipsoid { .. })
    }

    /// Linear map `L` with `L(B^n)` equal to the unit ball of this norm, for
    /// ellipsoidal norms.
    pub fn ellipsoid_map(&self) -> Option<DMatrix<f64>> {
        if let Some(e) = &self.ellipsoid {
            Some(&e.inv_sqrt / self.scale)
        } else if self.is_ellipsoidal() {
            let c = norm_eval(self, &unit(self.dim, 0)).ok()?;
            Some(DMatrix::identity(self.dim, self.dim) / c)
        } else {
            None
        }
    }

    /// Half-width of the unit ball along coordinate axis `i`, i.e. the
    /// largest `|x_i|` with `‖x‖ ≤ 1`.
    pub fn axis_extent(&self, i: usize) -> f64 {
        match (&self.kind, &self.ellipsoid) {
            (NormKind::Ellipsoid { .. }, Some(e)) => {
                // max x_i over xᵀAx ≤ 1 is sqrt((A^{-1})_{ii}).
                let row = e.inv_sqrt.row(i);
                row.dot(&row).sqrt() / self.scale
            }
            _ => 1.0 / self.scale,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let raw = match (&self.kind, &self.ellipsoid) {
            (NormKind::Lp { p }, _) => lp_norm(x, *p),
            (NormKind::Ellipsoid { matrix }, _) => {
                let mut s = 0.0;
                for (i, row) in matrix.iter().enumerate() {
                    s += x[i] * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
                s.max(0.0).sqrt()
            }
        };
        self.scale * raw
    }

    /// Dual norm of a linear functional `y ↦ ⟨v, y⟩`.
    pub fn dual_eval(&self, v: &[f64]) -> f64 {
        let raw = match (&self.kind, &self.ellipsoid) {
            (NormKind::Lp { p }, _) => lp_norm(v, conjugate(*p)),
            (NormKind::Ellipsoid { .. }, Some(e)) => {
                let w = &e.inv_sqrt * DVector::from_column_slice(v);
                w.norm()
            }
            _ => unreachable!("ellipsoid data is built on construction"),
        };
        raw / self.scale
    }
}

/// Hölder conjugate exponent.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn norm_eval(spec: &NormSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: x.len() });
    }
    Ok(spec.eval(x))
}

/// Constants `(c_low, c_high)` with `c_low‖x‖₂ ≤ ‖x‖ ≤ c_high‖x‖₂`, tight.
pub fn euclid_sandwich(spec: &NormSpec) -> (f64, f64) {
    let n = spec.dim as f64;
    let (lo, hi) = match (&spec.kind, &spec.ellipsoid) {
        (NormKind::Lp { p }, _) => {
            let e = n.powf(1.0 / p - 0.5);
            if *p >= 2.0 {
                (e, 1.0)
            } else {
                (1.0, e)
            }
        }
        (NormKind::Ellipsoid { .. }, Some(e)) => (e.lambda_min.sqrt(), e.lambda_max.sqrt()),
        _ => unreachable!("ellipsoid data is built on construction"),
    };
    (spec.scale * lo, spec.scale * hi)
}

/// Closed ball `center + radius·B_X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub norm: NormSpec,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64, norm: NormSpec) -> Result<Self> {
        if center.len() != norm.dim {
            return Err(Error::DimensionMismatch { expected: norm.dim, got: center.len() });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius, norm })
    }

    pub fn euclidean(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.len();
        Self::new(center, radius, NormSpec::euclidean(n))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.norm.eval(&d) <= self.radius * (1.0 + 1e-12)
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let half: Vec<f64> = (0..self.dim()).map(|i| self.radius * self.norm.axis_extent(i)).collect();
        (
            self.center.iter().zip(&half).map(|(c, h)| c - h).collect(),
            self.center.iter().zip(&half).map(|(c, h)| c + h).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_sphere;
    use approx::assert_relative_eq;

    #[test]
    fn norm_eval_examples() {
        assert_eq!(norm_eval(&NormSpec::lp(2.0, 2).unwrap(), &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(norm_eval(&NormSpec::lp(f64::INFINITY, 2).unwrap(), &[3.0, -4.0]).unwrap(), 4.0);
        assert_eq!(norm_eval(&NormSpec::lp(1.0, 3).unwrap(), &[1.0, 1.0, 1.0]).unwrap(), 3.0);
        assert!(matches!(
            norm_eval(&NormSpec::euclidean(2), &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(NormSpec::lp(0.5, 2).is_err());
        assert!(NormSpec::ellipsoid(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(NormSpec::ellipsoid(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).is_err());
    }

    /// Oracle: extremes of ‖x‖₁/‖x‖₂ over a dense sample of the circle.
    #[test]
    fn l1_sandwich_matches_dense_sphere_scan() {
        let spec = NormSpec::lp(1.0, 2).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for k in 0..100_000 {
            let t = k as f64 / 100_000.0 * std::f64::consts::TAU;
            let r = spec.eval(&[t.cos(), t.sin()]);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let (c_lo, c_hi) = euclid_sandwich(&spec);
        assert_relative_eq!(c_lo, 1.0);
        assert_relative_eq!(c_hi, 2f64.sqrt());
        assert_relative_eq!(lo, c_lo, epsilon = 1e-9);
        assert_relative_eq!(hi, c_hi, epsilon = 1e-8);
    }

    #[test]
    fn identity_sandwiches() {
        for n in 1..5 {
            assert_eq!(euclid_sandwich(&NormSpec::euclidean(n)), (1.0, 1.0));
            let id = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
            let (lo, hi) = euclid_sandwich(&NormSpec::ellipsoid(id).unwrap());
            assert_relative_eq!(lo, 1.0, epsilon = 1e-14);
            assert_relative_eq!(hi, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sandwich_has_no_violations() {
        let specs = [
            NormSpec::lp(1.0, 3).unwrap(),
            NormSpec::lp(1.5, 4).unwrap(),
            NormSpec::lp(3.0, 3).unwrap(),
            NormSpec::lp(f64::INFINITY, 5).unwrap().john_normalized(),
            NormSpec::ellipsoid(vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
        ];
        for spec in &specs {
            let (lo, hi) = euclid_sandwich(spec);
            for x in sample_sphere(spec.dim, 2000, 11) {
                let v = spec.eval(&x);
                assert!(lo * (1.0 - 1e-12) <= v && v <= hi * (1.0 + 1e-12), "{spec:?} {x:?}");
            }
        }
    }

    #[test]
    fn john_normalisation_sets_lower_constant_to_one() {
        let spec = NormSpec::lp(f64::INFINITY, 4).unwrap().john_normalized();
        let (lo, hi) = euclid_sandwich(&spec);
        assert_relative_eq!(lo, 1.0, epsilon = 1e-14);
        assert_relative_eq!(hi, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn homogeneity_and_triangle_inequality() {
        let specs = [
            NormSpec::lp(1.0, 3).unwrap(),
            NormSpec::lp(4.0, 3).unwrap(),
            NormSpec::ellipsoid(vec![vec![3.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(),
        ];
        let pts = sample_sphere(3, 300, 5);
        for spec in &specs {
            for w in pts.windows(3) {
                let s: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| a + 2.0 * b).collect();
                assert!(spec.eval(&s) <= spec.eval(&w[0]) + 2.0 * spec.eval(&w[1]) + 1e-12);
                let t: Vec<f64> = w[2].iter().map(|v| 3.5 * v).collect();
                assert_relative_eq!(spec.eval(&t), 3.5 * spec.eval(&w[2]), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn dual_norm_and_axis_extent() {
        let e = NormSpec::ellipsoid(vec![vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_relative_eq!(e.axis_extent(0), 0.5, epsilon = 1e-14);
        assert_relative_eq!(e.dual_eval(&[1.0, 0.0]), 0.5, epsilon = 1e-14);
        let l1 = NormSpec::lp(1.0, 2).unwrap();
        assert_eq!(l1.dual_eval(&[1.0, -3.0]), 3.0);
    }

    #[test]
    fn json_round_trip() {
        let spec = NormSpec::lp(f64::INFINITY, 3).unwrap().scaled(2.0).unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"kind":"lp","p":"inf","dim":3,"scale":2.0}"#);
        assert_eq!(serde_json::from_str::<NormSpec>(&s).unwrap(), spec);
        let bad = r#"{"kind":"lp","p":2,"dim":2,"bogus":1}"#;
        assert!(serde_json::from_str::<NormSpec>(bad).is_err());
        let ell: NormSpec = serde_json::from_str(r#"{"kind":"ellipsoid","matrix":[[2,0],[0,1]],"dim":2}"#).unwrap();
        assert_relative_eq!(ell.eval(&[1.0, 0.0]), 2f64.sqrt());
    }
}
