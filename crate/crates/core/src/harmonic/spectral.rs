//! Periodic spectral fields and Fourier multipliers.
//!
//! A lattice with `N` points and spacing `h` per axis is treated as a torus
//! of period `L = N·h`. Frequencies are `ξ = 2πk/L` with
//! `k ∈ {−⌈N/2⌉+1, …, ⌊N/2⌋}`, and `f(x) = Σ f̂(ξ) e^{i⟨x,ξ⟩}`, so `∂_j`
//! has symbol `iξ_j`. Odd symbols are set to zero at the Nyquist index.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::bumps::{omega, psi, theta, BumpKind};
use crate::geometry::{lp_norm, GridFunction, TargetNorm};
use crate::{par, Error, Result};

#[derive(Clone, Debug)]
pub struct SpectralField {
    lower: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    target: TargetNorm,
    /// One coefficient array per target coordinate, row-major, last axis fastest.
    coeffs: Vec<Vec<Complex64>>,
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// In-place n-dimensional FFT (unnormalised forward, `1/N`-normalised inverse).
fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let st = strides(shape);
    let total: usize = shape.iter().product();
    for (axis, &len) in shape.iter().enumerate() {
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let stride = st[axis];
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for start in 0..total {
            // Visit each line once, from its first element.
            if (start / stride) % len != 0 {
                continue;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[start + i * stride];
            }
            fft.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

impl SpectralField {
    pub fn from_grid(g: &GridFunction) -> Self {
        let n = g.len();
        let m = g.m();
        let shape = g.resolution().to_vec();
        let channels: Vec<usize> = (0..m).collect();
        let coeffs = par::map(channels, |c| {
            let mut data: Vec<Complex64> = (0..n).map(|i| Complex64::new(g.value(i)[c], 0.0)).collect();
            fft_nd(&mut data, &shape, false);
            data.iter_mut().for_each(|v| *v /= n as f64);
            data
        });
        SpectralField {
            lower: g.lower().to_vec(),
            spacing: (0..shape.len()).map(|a| g.spacing(a)).collect(),
            shape,
            target: g.target().clone(),
            coeffs,
        }
    }

    /// Back to lattice values (real parts).
    pub fn to_grid(&self) -> Result<GridFunction> {
        let n: usize = self.shape.iter().product();
        let m = self.target.m();
        let channels: Vec<usize> = (0..m).collect();
        let real = par::map(channels, |c| {
            let mut data: Vec<Complex64> = self.coeffs[c].iter().map(|v| v * n as f64).collect();
            fft_nd(&mut data, &self.shape, true);
            data.into_iter().map(|v| v.re).collect::<Vec<f64>>()
        });
        let mut values = vec![0.0; n * m];
        for (c, ch) in real.iter().enumerate() {
            for (i, v) in ch.iter().enumerate() {
                values[i * m + c] = *v;
            }
        }
        let upper = self
            .lower
            .iter()
            .zip(&self.spacing)
            .zip(&self.shape)
            .map(|((l, h), n)| l + h * (*n - 1) as f64)
            .collect();
        GridFunction::new(self.lower.clone(), upper, self.shape.clone(), values, self.target.clone())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn target(&self) -> &TargetNorm {
        &self.target
    }

    pub fn coeffs(&self, channel: usize) -> &[Complex64] {
        &self.coeffs[channel]
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.spacing[axis] * self.shape[axis] as f64
    }

    /// Signed integer frequency of index `i` along `axis`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> i64 {
        let n = self.shape[axis];
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Angular frequency vector and Nyquist flags of flat index `flat`.
    pub fn frequency(&self, flat: usize) -> (Vec<f64>, Vec<bool>) {
        let d = self.dim();
        let mut xi = vec![0.0; d];
        let mut nyq = vec![false; d];
        let mut f = flat;
        for a in (0..d).rev() {
            let i = f % self.shape[a];
            f /= self.shape[a];
            xi[a] = TAU * self.wavenumber(a, i) as f64 / self.period(a);
            nyq[a] = self.shape[a] % 2 == 0 && i == self.shape[a] / 2;
        }
        (xi, nyq)
    }

    /// Multiply every coefficient by `symbol(ξ, nyquist)`.
    pub fn apply_symbol(&self, symbol: impl Fn(&[f64], &[bool]) -> Complex64 + Sync) -> Self {
        let n = self.coeffs.first().map_or(0, Vec::len);
        let sym: Vec<Complex64> = (0..n)
            .map(|i| {
                let (xi, nyq) = self.frequency(i);
                symbol(&xi, &nyq)
            })
            .collect();
        let coeffs = self.coeffs.iter().map(|ch| ch.iter().zip(&sym).map(|(c, s)| c * s).collect()).collect();
        SpectralField { coeffs, ..self.clone() }
    }

    /// Largest coefficient-wise difference.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .zip(other.coeffs.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Fourier multiplier families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierSpec {
    /// `‖ξ‖^s`, i.e. `(−Δ)^{s/2}`.
    FracLaplacian { s: f64 },
    /// `iξ_j/‖ξ‖`.
    Riesz { axis: usize },
    /// `e^{−t‖ξ‖²}`.
    Heat { t: f64 },
    /// `|ξ₁|^a/‖ξ‖^a`.
    #[serde(rename = "m_a")]
    Ma { a: f64 },
    /// A Littlewood–Paley bump of the frequency along `axis`.
    Bump { kind: BumpKind, k: i32, axis: usize },
}

impl MultiplierSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            MultiplierSpec::FracLaplacian { s } if !(s >= 0.0 && s.is_finite()) => bad(format!("s must be ≥ 0, got {s}")),
            MultiplierSpec::Heat { t } if !(t >= 0.0 && t.is_finite()) => bad(format!("t must be ≥ 0, got {t}")),
            MultiplierSpec::Ma { a } if !(a > 0.0 && a <= 2.0) => bad(format!("a must lie in (0, 2], got {a}")),
            MultiplierSpec::Riesz { axis } | MultiplierSpec::Bump { axis, .. } if axis >= dim => {
                bad(format!("axis {axis} out of range for dimension {dim}"))
            }
            MultiplierSpec::Bump { kind: BumpKind::Phi, .. } => bad("bump multipliers use psi, omega or theta".into()),
            _ => Ok(()),
        }
    }

    pub fn symbol(&self, xi: &[f64], nyquist: &[bool]) -> Complex64 {
        let norm = lp_norm(xi, 2.0);
        let real = |v: f64| Complex64::new(v, 0.0);
        match *self {
            MultiplierSpec::FracLaplacian { s } => real(frac_laplacian_symbol(xi, s)),
            MultiplierSpec::Riesz { axis } => {
                if norm == 0.0 || nyquist[axis] {
                    real(0.0)
                } else {
                    Complex64::new(0.0, xi[axis] / norm)
                }
            }
            MultiplierSpec::Heat { t } => real((-t * norm * norm).exp()),
            MultiplierSpec::Ma { a } => {
                if norm == 0.0 {
                    real(0.0)
                } else {
                    real((xi[0].abs() / norm).powf(a))
                }
            }
            MultiplierSpec::Bump { kind, k, axis } => real(match kind {
                BumpKind::Psi => psi(k, xi[axis]),
                BumpKind::Omega => omega(k, xi[axis]),
                BumpKind::Theta | BumpKind::Phi => theta(k, xi[axis]),
            }),
        }
    }
}

/// `‖ξ‖^s`, with the zero frequency sent to 0 whenever `s ≠ 0`.
pub fn frac_laplacian_symbol(xi: &[f64], s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let norm = lp_norm(xi, 2.0);
    if norm == 0.0 {
        0.0
    } else {
        norm.powf(s)
    }
}

/// `iξ_j`, zero at the Nyquist index of axis `j`.
pub fn derivative_symbol(xi: &[f64], nyquist: &[bool], axis: usize) -> Complex64 {
    if nyquist[axis] {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, xi[axis])
    }
}

pub fn apply_multiplier(field: &SpectralField, spec: &MultiplierSpec) -> Result<SpectralField> {
    spec.validate(field.dim())?;
    Ok(field.apply_symbol(|xi, nyq| spec.symbol(xi, nyq)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Field, FnField};

    /// cos(⟨k, x⟩) on a periodic lattice of period L = N·h.
    fn plane_wave(shape: &[usize], h: f64, k: &[i64]) -> GridFunction {
        let d = shape.len();
        let per: Vec<f64> = shape.iter().map(|n| *n as f64 * h).collect();
        let k = k.to_vec();
        let f = FnField::new(d, TargetNorm::scalar(), move |x: &[f64], o: &mut [f64]| {
            o[0] = (0..x.len()).map(|a| TAU * k[a] as f64 * x[a] / per[a]).sum::<f64>().cos();
        });
        let upper = shape.iter().map(|n| h * (*n - 1) as f64).collect();
        GridFunction::sample(&f, vec![0.0; d], upper, shape.to_vec()).unwrap()
    }

    fn max_diff(a: &GridFunction, b: &GridFunction, scale: f64) -> f64 {
        a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - scale * y).abs()))
    }

    #[test]
    fn round_trip_is_identity() {
        let g = plane_wave(&[16, 12], 0.3, &[3, -2]);
        let back = SpectralField::from_grid(&g).to_grid().unwrap();
        assert!(max_diff(&back, &g, 1.0) < 1e-12);
    }

    #[test]
    fn frac_laplacian_scales_plane_waves_exactly() {
        let (shape, h, k) = ([32, 16], 0.25, [5_i64, -3]);
        let g = plane_wave(&shape, h, &k);
        let xi: Vec<f64> = (0..2).map(|a| TAU * k[a] as f64 / (shape[a] as f64 * h)).collect();
        for s in [0.3, 1.0, 1.7] {
            let out = apply_multiplier(&SpectralField::from_grid(&g), &MultiplierSpec::FracLaplacian { s })
                .unwrap()
                .to_grid()
                .unwrap();
            let lambda = lp_norm(&xi, 2.0).powf(s);
            assert!(max_diff(&out, &g, lambda) < 1e-10 * lambda.max(1.0));
        }
    }

    #[test]
    fn heat_fixes_constants_and_m_a_halves_the_diagonal() {
        let c = GridFunction::new(vec![0.0], vec![1.0], vec![8], vec![2.5; 8], TargetNorm::scalar()).unwrap();
        let out = apply_multiplier(&SpectralField::from_grid(&c), &MultiplierSpec::Heat { t: 0.7 }).unwrap();
        assert!(max_diff(&out.to_grid().unwrap(), &c, 1.0) < 1e-14);

        // ξ = (1, 1) on a lattice of period 2π.
        let n = 16;
        let h = TAU / n as f64;
        let g = plane_wave(&[n, n], h, &[1, 1]);
        let out = apply_multiplier(&SpectralField::from_grid(&g), &MultiplierSpec::Ma { a: 2.0 }).unwrap();
        assert!(max_diff(&out.to_grid().unwrap(), &g, 0.5) < 1e-13);
    }

    #[test]
    fn semigroup_composition() {
        let g = plane_wave(&[24, 20], 0.1, &[2, 3]);
        let base = SpectralField::from_grid(&g);
        let noisy = base.apply_symbol(|xi, _| Complex64::new(1.0 + xi[0].sin(), 0.0));
        let half = MultiplierSpec::FracLaplacian { s: 0.35 };
        let twice = apply_multiplier(&apply_multiplier(&noisy, &half).unwrap(), &half).unwrap();
        let once = apply_multiplier(&noisy, &MultiplierSpec::FracLaplacian { s: 0.7 }).unwrap();
        assert!(twice.max_abs_diff(&once) < 1e-8);
    }

    #[test]
    fn riesz_is_inverse_sqrt_laplacian_times_derivative() {
        let f = FnField::new(2, TargetNorm::scalar(), |x: &[f64], o: &mut [f64]| {
            o[0] = (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() * (1.0 + x[0]);
        });
        let g = GridFunction::sample(&f, vec![-4.0, -4.0], vec![4.0, 4.0], vec![32, 33]).unwrap();
        let sf = SpectralField::from_grid(&g);
        for axis in 0..2 {
            let riesz = apply_multiplier(&sf, &MultiplierSpec::Riesz { axis }).unwrap();
            let composed = sf.apply_symbol(|xi, nyq| derivative_symbol(xi, nyq, axis) * frac_laplacian_symbol(xi, -1.0));
            assert!(riesz.max_abs_diff(&composed) < 1e-10);
        }
        let _ = f.dim();
    }

    #[test]
    fn multiplier_json_shape_and_validation() {
        let spec: MultiplierSpec = serde_json::from_str(r#"{"family":"m_a","params":{"a":1.5}}"#).unwrap();
        assert_eq!(spec, MultiplierSpec::Ma { a: 1.5 });
        let bump = MultiplierSpec::Bump { kind: BumpKind::Omega, k: -2, axis: 0 };
        let s = serde_json::to_string(&bump).unwrap();
        assert_eq!(s, r#"{"family":"bump","params":{"kind":"omega","k":-2,"axis":0}}"#);
        assert!(MultiplierSpec::Ma { a: 2.5 }.validate(1).is_err());
        assert!(MultiplierSpec::FracLaplacian { s: -1.0 }.validate(1).is_err());
        assert!(MultiplierSpec::Riesz { axis: 2 }.validate(2).is_err());
    }
}
