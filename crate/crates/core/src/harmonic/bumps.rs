//! Smooth dyadic partition of unity.
//!
//! `φ` is supported on `1/2 < |x| < 2`, `ψ_k = φ(2^k·)/Σ_j φ(2^j·)`,
//! `ω_k = ψ_{k−1} + ψ_k + ψ_{k+1}` and `θ_k(x) = sin⁴(2^k x)/(2^k x)²`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpKind {
    Phi,
    Psi,
    Omega,
    Theta,
}

pub fn phi(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 || a >= 2.0 {
        0.0
    } else {
        (-1.0 / ((a - 0.5) * (2.0 - a))).exp()
    }
}

/// Indices `j` for which `φ(2^j x)` can be nonzero (a superset, in order).
fn window(x: f64) -> std::ops::RangeInclusive<i32> {
    let c = -x.abs().log2().floor() as i32;
    (c - 2)..=(c + 2)
}

fn scaled(j: i32, x: f64) -> f64 {
    phi(2f64.powi(j) * x)
}

fn sum_over(js: impl Iterator<Item = i32>, x: f64) -> f64 {
    js.map(|j| scaled(j, x)).sum()
}

pub fn psi(k: i32, x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    let num = scaled(k, x);
    if num == 0.0 {
        return 0.0;
    }
    num / sum_over(window(x), x)
}

pub fn omega(k: i32, x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    // Summing the same nonzero terms in the same order as the denominator
    // makes ω_k exactly 1 on the support of ψ_k.
    let w = window(x);
    let (lo, hi) = (*w.start(), *w.end());
    let num = sum_over((lo..=hi).filter(|j| (k - 1..=k + 1).contains(j)), x);
    if num == 0.0 {
        return 0.0;
    }
    num / sum_over(w, x)
}

pub fn theta(k: i32, x: f64) -> f64 {
    let y = 2f64.powi(k) * x;
    if y == 0.0 {
        0.0
    } else {
        y.sin().powi(4) / (y * y)
    }
}

pub fn bump_eval(kind: BumpKind, k: i32, x: f64) -> f64 {
    match kind {
        BumpKind::Phi => phi(x),
        BumpKind::Psi => psi(k, x),
        BumpKind::Omega => omega(k, x),
        BumpKind::Theta => theta(k, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn direct_values() {
        assert_relative_eq!(phi(1.0), (-2f64).exp(), epsilon = 1e-16);
        assert_relative_eq!(phi(1.0), 0.135_335_283_236_612_7, epsilon = 1e-15);
        assert_eq!(phi(0.4), 0.0);
        assert_eq!(phi(-2.0), 0.0);
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(theta(0, half_pi), 4.0 / (std::f64::consts::PI.powi(2)), epsilon = 1e-15);
        assert_eq!(theta(3, 0.0), 0.0);
    }

    #[test]
    fn partition_of_unity() {
        let mut worst = 0.0_f64;
        for i in 0..10_000 {
            let x = 2f64.powf(-18.0 + 36.0 * i as f64 / 9_999.0);
            let s: f64 = (-20..=20).map(|j| psi(j, x)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn omega_is_one_on_psi_support() {
        for k in -5..=5 {
            for i in 0..2000 {
                let x = 2f64.powf(-8.0 + 16.0 * i as f64 / 1999.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
                let p = psi(k, x);
                assert!((omega(k, x) * p - p).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn psi_has_at_most_two_nonzero_terms() {
        for i in 1..500 {
            let x = i as f64 * 0.037;
            let count = (-30..=30).filter(|j| psi(*j, x) != 0.0).count();
            assert!((1..=2).contains(&count), "x={x}: {count}");
        }
    }
}
