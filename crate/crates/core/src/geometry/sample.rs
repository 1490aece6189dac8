//! Uniform sampling in balls.

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{euclid_sandwich, norm::Ball};
use crate::{rng, Error, Result};

/// Give up on rejection sampling once this many draws have been made with an
/// acceptance rate below [`MIN_ACCEPTANCE`].
const REJECTION_PROBE: u64 = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-6;

fn gaussian_direction(n: usize, r: &mut rng::Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let norm = super::euclid(&v);
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn uniform_in_unit_ball(n: usize, r: &mut rng::Rng) -> Vec<f64> {
    let dir = gaussian_direction(n, r);
    let rad = r.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|x| x * rad).collect()
}

/// Uniform points on the Euclidean unit sphere `S^{n-1}`.
pub fn sample_sphere(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::rng(seed);
    (0..count).map(|_| gaussian_direction(n, &mut r)).collect()
}

/// Uniform points in the Euclidean unit ball `B^n`.
pub fn sample_euclidean_unit_ball(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::rng(seed);
    (0..count).map(|_| uniform_in_unit_ball(n, &mut r)).collect()
}

/// `count` uniform points in `ball`.
///
/// Balls whose norm is a linear image of the Euclidean one are sampled
/// directly; other norms use rejection from the circumscribed Euclidean ball.
pub fn sample_ball(ball: &Ball, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let n = ball.dim();
    let mut r = rng::rng(seed);
    let shift = |z: Vec<f64>| -> Vec<f64> { z.iter().zip(&ball.center).map(|(a, c)| c + a).collect() };

    if let Some(map) = ball.norm.ellipsoid_map() {
        let out = (0..count)
            .map(|_| {
                let z = uniform_in_unit_ball(n, &mut r);
                let y: Vec<f64> = (0..n)
                    .map(|i| ball.radius * (0..n).map(|j| map[(i, j)] * z[j]).sum::<f64>())
                    .collect();
                shift(y)
            })
            .collect();
        return Ok(out);
    }

    let (c_low, _) = euclid_sandwich(&ball.norm);
    let bound = ball.radius / c_low;
    let mut out = Vec::with_capacity(count);
    let mut attempts: u64 = 0;
    while out.len() < count {
        attempts += 1;
        let z: Vec<f64> = uniform_in_unit_ball(n, &mut r).into_iter().map(|x| x * bound).collect();
        if ball.norm.eval(&z) <= ball.radius {
            out.push(shift(z));
        }
        if attempts % REJECTION_PROBE == 0 {
            let rate = out.len() as f64 / attempts as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::DegenerateNorm { rate, attempts });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NormSpec;

    const N: usize = 100_000;

    fn three_sigma(p: f64) -> f64 {
        3.0 * (p * (1.0 - p) / N as f64).sqrt()
    }

    #[test]
    fn euclidean_disc_is_centred_and_has_quarter_mass_in_half_radius() {
        let ball = Ball::euclidean(vec![0.0, 0.0], 1.0).unwrap();
        let pts = sample_ball(&ball, N, 1).unwrap();
        for axis in 0..2 {
            let mean = pts.iter().map(|p| p[axis]).sum::<f64>() / N as f64;
            // Var of a coordinate of the uniform disc is 1/4.
            assert!(mean.abs() < 3.0 * (0.25 / N as f64).sqrt(), "mean {mean}");
        }
        let inner = pts.iter().filter(|p| super::super::euclid(p) < 0.5).count() as f64 / N as f64;
        assert!((inner - 0.25).abs() < three_sigma(0.25), "{inner}");
    }

    #[test]
    fn sup_norm_ball_quadrant_mass() {
        let ball = Ball::new(vec![0.0, 0.0], 1.0, NormSpec::lp(f64::INFINITY, 2).unwrap()).unwrap();
        let pts = sample_ball(&ball, N, 2).unwrap();
        let q = pts.iter().filter(|p| p[0] > 0.0 && p[1] > 0.0).count() as f64 / N as f64;
        assert!((q - 0.25).abs() < three_sigma(0.25), "{q}");
    }

    #[test]
    fn samples_are_contained_and_deterministic() {
        let specs = [
            NormSpec::lp(1.0, 3).unwrap(),
            NormSpec::lp(f64::INFINITY, 3).unwrap().john_normalized(),
            NormSpec::lp(3.0, 2).unwrap(),
            NormSpec::ellipsoid(vec![vec![4.0, 1.0], vec![1.0, 1.0]]).unwrap(),
            NormSpec::lp(1.0, 1).unwrap().scaled(3.0).unwrap(),
        ];
        for spec in specs {
            let ball = Ball::new(vec![0.5; spec.dim], 0.3, spec).unwrap();
            let a = sample_ball(&ball, 2000, 9).unwrap();
            assert_eq!(a, sample_ball(&ball, 2000, 9).unwrap());
            assert!(a.iter().all(|p| ball.contains(p)));
        }
    }

    #[test]
    fn ellipsoid_fill_matches_volume_ratio() {
        // Ellipse x²/4 + y² ≤ 1 has area 2π; the strip |x| ≤ 1 holds 2π/3 + √3 of it.
        let spec = NormSpec::ellipsoid(vec![vec![0.25, 0.0], vec![0.0, 1.0]]).unwrap();
        let ball = Ball::new(vec![0.0, 0.0], 1.0, spec).unwrap();
        let pts = sample_ball(&ball, N, 3).unwrap();
        let frac = pts.iter().filter(|p| p[0].abs() <= 1.0).count() as f64 / N as f64;
        let exact = (2.0 * (3f64.sqrt() / 2.0) + 4.0 * (0.5f64).asin()) / (2.0 * std::f64::consts::PI);
        assert!((frac - exact).abs() < three_sigma(exact), "{frac} vs {exact}");
    }

    #[test]
    fn zero_count_is_rejected() {
        let ball = Ball::euclidean(vec![0.0], 1.0).unwrap();
        assert!(sample_ball(&ball, 0, 0).is_err());
    }
}
