use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `z ↦ intercept + linear·z` from `R^n` to `R^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub intercept: Vec<f64>,
    /// `m` rows of length `n`.
    pub linear: Vec<Vec<f64>>,
}

impl AffineMap {
    pub fn new(intercept: Vec<f64>, linear: Vec<Vec<f64>>) -> Result<Self> {
        if linear.len() != intercept.len() {
            return Err(Error::DimensionMismatch { expected: intercept.len(), got: linear.len() });
        }
        let n = linear.first().map_or(0, Vec::len);
        if n == 0 || linear.iter().any(|r| r.len() != n) {
            return Err(Error::param("linear part must be a non-empty m×n matrix"));
        }
        if intercept.iter().chain(linear.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::param("affine map has non-finite entries"));
        }
        Ok(AffineMap { intercept, linear })
    }

    pub fn constant(value: Vec<f64>, n: usize) -> Self {
        let m = value.len();
        AffineMap { intercept: value, linear: vec![vec![0.0; n]; m] }
    }

    /// The map `z ↦ value + linear·(z − center)`.
    pub fn centered(center: &[f64], value: Vec<f64>, linear: Vec<Vec<f64>>) -> Self {
        let intercept = value
            .iter()
            .zip(&linear)
            .map(|(v, row)| v - row.iter().zip(center).map(|(a, c)| a * c).sum::<f64>())
            .collect();
        AffineMap { intercept, linear }
    }

    pub fn m(&self) -> usize {
        self.intercept.len()
    }

    pub fn n(&self) -> usize {
        self.linear.first().map_or(0, Vec::len)
    }

    pub fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        for ((o, a), row) in out.iter_mut().zip(&self.intercept).zip(&self.linear) {
            *o = a + row.iter().zip(z).map(|(t, z)| t * z).sum::<f64>();
        }
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        self.eval_into(z, &mut out);
        out
    }

    /// Largest absolute difference of coefficients.
    pub fn max_abs_diff(&self, other: &AffineMap) -> f64 {
        self.intercept
            .iter()
            .zip(&other.intercept)
            .chain(self.linear.iter().flatten().zip(other.linear.iter().flatten()))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_form_agrees_with_absolute_form() {
        let map = AffineMap::centered(&[1.0, 2.0], vec![5.0], vec![vec![3.0, -1.0]]);
        assert_eq!(map.eval(&[1.0, 2.0]), vec![5.0]);
        assert_eq!(map.eval(&[2.0, 2.0]), vec![8.0]);
        assert_eq!(map.intercept, vec![4.0]);
    }

    #[test]
    fn validation() {
        assert!(AffineMap::new(vec![0.0], vec![vec![f64::NAN]]).is_err());
        assert!(AffineMap::new(vec![0.0, 1.0], vec![vec![1.0]]).is_err());
        assert!(AffineMap::new(vec![0.0], vec![vec![1.0, 2.0]]).is_ok());
    }
}
