//! Randomised Littlewood–Paley square function `Σ_j ε_j T_{θ_j} f`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::spectral::{apply_multiplier, MultiplierSpec, SpectralField};
use super::BumpKind;
use crate::geometry::GridFunction;
use crate::{rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareFunctionReport {
    #[serde(with = "crate::serde_ext::exponent")]
    pub p: f64,
    pub first_band: i32,
    pub bands: usize,
    pub trials: usize,
    /// Average of `‖Σ_j ε_j T_{θ_j} f‖_p^p` over the sign draws.
    pub mean_pp: f64,
    /// `‖f‖_p^p`.
    pub norm_pp: f64,
    /// `mean_pp / norm_pp`, 0 for `f = 0`.
    pub ratio: f64,
}

/// `T_{θ_j} f` for `j = first_band, …, first_band + bands − 1`, as lattice values.
fn band_components(g: &GridFunction, first_band: i32, bands: usize) -> Result<Vec<Vec<f64>>> {
    if g.dim() != 1 {
        return Err(Error::param("the square function is defined for one-dimensional fields"));
    }
    let sf = SpectralField::from_grid(g);
    (0..bands)
        .map(|b| {
            let spec = MultiplierSpec::Bump { kind: BumpKind::Theta, k: first_band + b as i32, axis: 0 };
            Ok(apply_multiplier(&sf, &spec)?.to_grid()?.values().to_vec())
        })
        .collect()
}

fn lattice_pp(g: &GridFunction, values: &[f64], p: f64) -> f64 {
    let m = g.m();
    values.chunks(m).map(|v| g.target().norm(v).powf(p)).sum::<f64>() * g.spacing(0)
}

fn signed_sum(bands: &[Vec<f64>], signs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; bands[0].len()];
    for (band, s) in bands.iter().zip(signs) {
        out.iter_mut().zip(band).for_each(|(o, v)| *o += s * v);
    }
    out
}

fn validate(p: f64, bands: usize) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must lie in [1, ∞), got {p}")));
    }
    if bands == 0 {
        return Err(Error::param("at least one band is required"));
    }
    Ok(())
}

fn report(g: &GridFunction, p: f64, first_band: i32, bands: usize, trials: usize, mean_pp: f64) -> SquareFunctionReport {
    let norm_pp = lattice_pp(g, g.values(), p);
    let ratio = if norm_pp == 0.0 { 0.0 } else { mean_pp / norm_pp };
    SquareFunctionReport { p, first_band, bands, trials, mean_pp, norm_pp, ratio }
}

/// Seeded Monte Carlo average over `trials` sign vectors.
pub fn lp_randomized_square_function(
    g: &GridFunction,
    p: f64,
    first_band: i32,
    bands: usize,
    trials: usize,
    seed: u64,
) -> Result<SquareFunctionReport> {
    validate(p, bands)?;
    if trials == 0 {
        return Err(Error::param("at least one trial is required"));
    }
    let comps = band_components(g, first_band, bands)?;
    let mut r = rng::rng(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        let signs: Vec<f64> = (0..bands).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
        acc += lattice_pp(g, &signed_sum(&comps, &signs), p);
    }
    Ok(report(g, p, first_band, bands, trials, acc / trials as f64))
}

/// Exact average over all `2^bands` sign vectors (`bands ≤ 16`).
pub fn square_function_exhaustive(g: &GridFunction, p: f64, first_band: i32, bands: usize) -> Result<SquareFunctionReport> {
    validate(p, bands)?;
    if bands > 16 {
        return Err(Error::param("exhaustive enumeration is limited to 16 bands"));
    }
    let comps = band_components(g, first_band, bands)?;
    let count = 1usize << bands;
    let mut acc = 0.0;
    for bits in 0..count {
        let signs: Vec<f64> = (0..bands).map(|b| if bits >> b & 1 == 1 { -1.0 } else { 1.0 }).collect();
        acc += lattice_pp(g, &signed_sum(&comps, &signs), p);
    }
    Ok(report(g, p, first_band, bands, count, acc / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{scalar_field, TargetNorm};
    use approx::assert_relative_eq;

    fn grid(f: impl Fn(f64) -> f64 + Sync) -> GridFunction {
        GridFunction::sample(&scalar_field(1, move |x| f(x[0])), vec![-8.0], vec![8.0], vec![512]).unwrap()
    }

    #[test]
    fn zero_field() {
        let g = GridFunction::new(vec![0.0], vec![1.0], vec![16], vec![0.0; 16], TargetNorm::scalar()).unwrap();
        let r = lp_randomized_square_function(&g, 3.0, -2, 4, 10, 0).unwrap();
        assert_eq!((r.mean_pp, r.ratio), (0.0, 0.0));
    }

    #[test]
    fn single_band_is_sign_independent() {
        let g = grid(|x| (-x * x).exp());
        let comps = band_components(&g, 0, 1).unwrap();
        let single = lattice_pp(&g, &comps[0], 3.0) / lattice_pp(&g, g.values(), 3.0);
        let r = lp_randomized_square_function(&g, 3.0, 0, 1, 7, 1).unwrap();
        assert_relative_eq!(r.ratio, single, max_relative = 1e-12);
    }

    /// Oracle: exhaustive sign enumeration for J ≤ 12.
    #[test]
    fn hilbert_case_is_bounded_by_one() {
        let g = grid(|x| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 });
        let exact = square_function_exhaustive(&g, 2.0, -6, 12).unwrap();
        assert!(exact.ratio <= 1.05, "{}", exact.ratio);
        let sampled = lp_randomized_square_function(&g, 2.0, -6, 12, 256, 3).unwrap();
        // For p = 2 cross terms cancel in expectation only; each draw has the same
        // diagonal part, so the sample mean stays close to the exact average.
        assert_relative_eq!(sampled.ratio, exact.ratio, max_relative = 0.1);
    }
}
