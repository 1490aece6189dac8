//! Norms, balls, sampled fields and Lipschitz estimates.

mod field;
mod io;
mod lipschitz;
mod norm;
mod sample;

pub use field::{scalar_field, Field, FnField, GridFunction, TargetNorm};
pub use io::{read_csv, read_grid, read_grid_binary, write_csv, write_grid_binary};
pub use lipschitz::{lipschitz_estimate, lipschitz_estimate_with, LipschitzOptions};
pub use norm::{conjugate, euclid_sandwich, norm_eval, Ball, NormKind, NormSpec};
pub use sample::{sample_ball, sample_euclidean_unit_ball, sample_sphere};

/// `‖x‖_p` for `p ∈ [1, ∞]`.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else {
        // Rescale by the max entry so large exponents do not overflow.
        let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub fn euclid(x: &[f64]) -> f64 {
    lp_norm(x, 2.0)
}

/// Volume of the Euclidean unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    std::f64::consts::PI.powf(n / 2.0) / statrs::function::gamma::gamma(n / 2.0 + 1.0)
}

/// Surface area of the unit sphere `S^{n-1}`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lp_norm_is_stable_for_large_exponents() {
        assert_relative_eq!(lp_norm(&[1e200, 1e200], 4.0), 1e200 * 2f64.powf(0.25), max_relative = 1e-14);
        assert_relative_eq!(lp_norm(&[3.0, -4.0], f64::INFINITY), 4.0);
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 / 3.0 * std::f64::consts::PI, epsilon = 1e-13);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * std::f64::consts::PI, epsilon = 1e-14);
    }
}
