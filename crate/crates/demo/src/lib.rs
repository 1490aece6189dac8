//! WebAssembly bindings behind the static page in `www/`.
//!
//! Each export returns flat `Float64Array`s or a small handle object so the
//! page needs no glue beyond what `wasm-bindgen` generates.

use affinescope::affine::best_affine;
use affinescope::banach::{burkholder_constant, umd_depth_trace, MartingaleFamily};
use affinescope::harmonic::psi;
use affinescope::moduli::{sawtooth_f, sawtooth_field, SawtoothSpec};
use affinescope::{Ball, NormSpec, TargetNorm};
use wasm_bindgen::prelude::*;

fn js(e: affinescope::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn exponent(v: f64) -> f64 {
    // The page encodes `∞` as any non-positive number.
    if v <= 0.0 {
        f64::INFINITY
    } else {
        v
    }
}

/// Rows `[x, ψ_{k_lo}(x), …, ψ_{k_hi}(x), Σ_k ψ_k(x)]`, each of length
/// `samples`, sampled on a log-spaced grid of `[x_min, x_max]`.
#[wasm_bindgen]
pub fn psi_curves(k_lo: i32, k_hi: i32, x_min: f64, x_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    if !(0.0 < x_min && x_min < x_max) || k_lo > k_hi || samples < 2 {
        return Err(JsError::new("need 0 < x_min < x_max, k_lo ≤ k_hi and at least two samples"));
    }
    let (l0, l1) = (x_min.ln(), x_max.ln());
    let xs: Vec<f64> = (0..samples).map(|i| (l0 + (l1 - l0) * i as f64 / (samples - 1) as f64).exp()).collect();
    let mut out = xs.clone();
    let mut total = vec![0.0; samples];
    for k in k_lo..=k_hi {
        for (t, &x) in total.iter_mut().zip(&xs) {
            let v = psi(k, x);
            out.push(v);
            *t += v;
        }
    }
    out.extend(total);
    Ok(out)
}

/// The best affine fit of the `m`-band sawtooth on `[a, b]`.
#[wasm_bindgen]
pub struct SawtoothFit {
    error: f64,
    radius: f64,
    m: usize,
    xs: Vec<f64>,
    values: Vec<f64>,
    affine: Vec<f64>,
}

#[wasm_bindgen]
impl SawtoothFit {
    /// `L_p` distance to the nearest affine map, averaged over the interval.
    #[wasm_bindgen(getter)]
    pub fn error(&self) -> f64 {
        self.error
    }

    /// `error / radius`, the quantity bounded below on every long interval.
    #[wasm_bindgen(getter)]
    pub fn scaled_error(&self) -> f64 {
        self.error / self.radius
    }

    #[wasm_bindgen(getter)]
    pub fn bands(&self) -> usize {
        self.m
    }

    #[wasm_bindgen(getter)]
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }

    /// Band values, `m` per sample, sample-major.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// The fitted map at the same samples, laid out like [`Self::values`].
    #[wasm_bindgen(getter)]
    pub fn affine(&self) -> Vec<f64> {
        self.affine.clone()
    }
}

/// Fits `x ↦ Σ_k φ(2^k x) 2^{−k} e_k` in `L_fit_p(ℓ_p^m)` on `[a, b]`.
#[wasm_bindgen]
pub fn sawtooth_fit(m: usize, p: f64, a: f64, b: f64, fit_p: f64, samples: usize) -> Result<SawtoothFit, JsError> {
    if !(a < b) || samples < 2 {
        return Err(JsError::new("need a < b and at least two samples"));
    }
    let spec = SawtoothSpec::new(m, exponent(p)).map_err(js)?;
    let radius = 0.5 * (b - a);
    let ball = Ball::new(vec![0.5 * (a + b)], radius, NormSpec::lp(2.0, 1).map_err(js)?).map_err(js)?;
    let fit = best_affine(&sawtooth_field(spec), &ball, exponent(fit_p)).map_err(js)?;
    let xs: Vec<f64> = (0..samples).map(|i| a + (b - a) * i as f64 / (samples - 1) as f64).collect();
    let values = xs.iter().flat_map(|&x| sawtooth_f(&spec, x)).collect();
    let affine = xs.iter().flat_map(|&x| fit.map.eval(&[x])).collect();
    Ok(SawtoothFit { error: fit.error, radius, m, xs, values, affine })
}

/// Best `β_p` lower bound for random `ℓ_q^m`-valued martingales at every
/// depth `1..=depth`, followed by the scalar constant `max{p, p'} − 1`.
#[wasm_bindgen]
pub fn umd_trace(m: usize, q: f64, p: f64, members: usize, depth: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let target = TargetNorm::lq(m, exponent(q));
    target.validate().map_err(js)?;
    let family = MartingaleFamily::new(target, members, seed);
    let trace = umd_depth_trace(&family, p, depth).map_err(js)?;
    let mut out: Vec<f64> = trace.iter().map(|[beta, _, _]| beta.value).collect();
    out.push(burkholder_constant(p));
    Ok(out)
}
