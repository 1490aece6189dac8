//! Builtin input fields addressed by short ids such as `sawtooth:m=3:p=2`.
//!
//! | family       | keys                          | field                                   |
//! |--------------|-------------------------------|-----------------------------------------|
//! | `affine`     | `n`, `m`                      | seeded random affine map                |
//! | `sawtooth`   | `m`, `p`                      | multi-band sawtooth on `[−1, 1]`        |
//! | `tensor`     | `n`, `m`, `p`, `k`, `eps`     | tensorised sawtooth                     |
//! | `radial`     | `n`                           | `‖x‖₂`                                  |
//! | `random-lip` | `n`, `m`, `seed`, `terms`     | random Fourier sum with `Lip ≤ 1`       |
//! | `cutoff`     | an inner id                   | radial cutoff extension of the inner id |
//!
//! Every family also accepts `res`, the lattice resolution per axis. All
//! fields live on `[−1, 1]^n` except cutoff extensions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::geometry::{lipschitz_estimate, scalar_field, FnField, GridFunction, NormSpec, TargetNorm};
use crate::moduli::{cutoff_extend, sawtooth_field, tensor_field, SawtoothSpec, TensorSpec};
use crate::{rng, serde_ext, Error, Result};

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub grid: GridFunction,
    pub meta: CorpusMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusMeta {
    pub id: String,
    pub dim: usize,
    pub target: TargetNorm,
    pub resolution: Vec<usize>,
    /// Lattice Lipschitz estimate with respect to `‖·‖₂`.
    pub lip: f64,
}

struct Keys {
    id: String,
    map: BTreeMap<String, String>,
}

impl Keys {
    fn parse(id: &str, rest: &[&str], allowed: &[&str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in rest {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::param(format!("corpus id `{id}`: expected key=value, got `{part}`")))?;
            if !allowed.contains(&k) && k != "res" {
                return Err(Error::param(format!("corpus id `{id}`: unknown key `{k}`")));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::param(format!("corpus id `{id}`: repeated key `{k}`")));
            }
        }
        Ok(Keys { id: id.to_string(), map })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.map.get(key) {
            Some(v) => v.parse().map_err(|_| Error::param(format!("corpus id `{}`: bad value for `{key}`", self.id))),
            None => default.ok_or_else(|| Error::param(format!("corpus id `{}`: missing `{key}`", self.id))),
        }
    }

    fn exponent(&self, key: &str, default: f64) -> Result<f64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => serde_json::from_value::<Exp>(serde_json::Value::String(v.clone()))
                .map(|e| e.0)
                .map_err(|_| Error::param(format!("corpus id `{}`: bad exponent `{v}`", self.id))),
        }
    }

    fn resolution(&self, n: usize) -> Result<usize> {
        let default = match n {
            1 => 513,
            2 => 65,
            _ => 17,
        };
        let res: usize = self.get("res", Some(default))?;
        if res < 3 {
            return Err(Error::param(format!("corpus id `{}`: res must be ≥ 3", self.id)));
        }
        Ok(res)
    }
}

#[derive(serde::Deserialize)]
struct Exp(#[serde(with = "serde_ext::exponent")] f64);

fn cube<F: crate::Field + ?Sized>(f: &F, n: usize, res: usize) -> Result<GridFunction> {
    GridFunction::sample(f, vec![-1.0; n], vec![1.0; n], vec![res; n])
}

fn dimension(keys: &Keys) -> Result<usize> {
    let n: usize = keys.get("n", Some(1))?;
    if !(1..=3).contains(&n) {
        return Err(Error::param(format!("corpus id `{}`: n must lie in 1..=3", keys.id)));
    }
    Ok(n)
}

/// Builds the field named by `id`. `seed` drives the families that are
/// random and carry no `seed` key of their own.
pub fn corpus(id: &str, seed: u64) -> Result<CorpusEntry> {
    let grid = build(id, seed)?;
    let lip = lipschitz_estimate(&grid, &NormSpec::euclidean(grid.dim()))?;
    let meta = CorpusMeta {
        id: id.to_string(),
        dim: grid.dim(),
        target: grid.target().clone(),
        resolution: grid.resolution().to_vec(),
        lip,
    };
    Ok(CorpusEntry { grid, meta })
}

fn build(id: &str, seed: u64) -> Result<GridFunction> {
    let parts: Vec<&str> = id.trim().split(':').collect();
    let (family, rest) = parts.split_first().expect("split yields at least one part");
    match *family {
        "affine" => {
            let keys = Keys::parse(id, rest, &["n", "m"])?;
            let n = dimension(&keys)?;
            let m: usize = keys.get("m", Some(1))?;
            let mut g = rng::rng(seed);
            let intercept: Vec<f64> = (0..m).map(|_| g.random_range(-1.0..1.0)).collect();
            let linear: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
            let field = FnField::new(n, TargetNorm::lq(m, 2.0), move |x: &[f64], out: &mut [f64]| {
                for (o, (b, row)) in out.iter_mut().zip(intercept.iter().zip(&linear)) {
                    *o = b + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
                }
            });
            cube(&field, n, keys.resolution(n)?)
        }
        "sawtooth" => {
            let keys = Keys::parse(id, rest, &["m", "p"])?;
            let spec = SawtoothSpec::new(keys.get("m", None)?, keys.exponent("p", 2.0)?)?;
            let res = keys.get("res", Some((1usize << (spec.m + 6).min(16)) + 1))?;
            cube(&sawtooth_field(spec), 1, res)
        }
        "tensor" => {
            let keys = Keys::parse(id, rest, &["n", "m", "p", "k", "eps"])?;
            let n = dimension(&keys)?;
            let spec = TensorSpec {
                n,
                m: keys.get("m", None)?,
                p: keys.exponent("p", 2.0)?,
                k: keys.get("k", None)?,
                epsilon: keys.get("eps", None)?,
            };
            cube(&tensor_field(spec)?, n, keys.resolution(n)?)
        }
        "radial" => {
            let keys = Keys::parse(id, rest, &["n"])?;
            let n = dimension(&keys)?;
            cube(&scalar_field(n, |x| x.iter().map(|v| v * v).sum::<f64>().sqrt()), n, keys.resolution(n)?)
        }
        "random-lip" => {
            let keys = Keys::parse(id, rest, &["n", "m", "seed", "terms"])?;
            let n = dimension(&keys)?;
            let m: usize = keys.get("m", Some(1))?;
            let terms: usize = keys.get("terms", Some(8))?;
            if m == 0 || terms == 0 {
                return Err(Error::param(format!("corpus id `{id}`: m and terms must be positive")));
            }
            let field = random_fourier(n, m, terms, keys.get("seed", Some(seed))?);
            cube(&field, n, keys.resolution(n)?)
        }
        "cutoff" => {
            if rest.is_empty() {
                return Err(Error::param("corpus id `cutoff`: missing inner id"));
            }
            cutoff_extend(&build(&rest.join(":"), seed)?)
        }
        _ => Err(Error::UnknownCorpus(id.to_string())),
    }
}

/// `Σ_j a_j sin(ω_j·x + φ_j)` per component, divided by `√m Σ_j |a_j|‖ω_j‖₂`
/// so that the map is 1-Lipschitz into `ℓ₂^m`.
fn random_fourier(n: usize, m: usize, terms: usize, seed: u64) -> FnField<impl Fn(&[f64], &mut [f64]) + Sync> {
    let mut g = rng::rng(seed);
    let mut comps = Vec::with_capacity(m);
    for _ in 0..m {
        let mut waves = Vec::with_capacity(terms);
        let mut slope = 0.0;
        for _ in 0..terms {
            let omega: Vec<f64> = (0..n).map(|_| 3.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut g)).collect();
            let phase = g.random_range(0.0..2.0 * PI);
            let amp: f64 = g.random_range(-1.0..1.0);
            slope += amp.abs() * omega.iter().map(|w| w * w).sum::<f64>().sqrt();
            waves.push((amp, omega, phase));
        }
        let scale = 1.0 / (slope.max(1e-300) * (m as f64).sqrt());
        comps.push((scale, waves));
    }
    FnField::new(n, TargetNorm::lq(m, 2.0), move |x: &[f64], out: &mut [f64]| {
        for (o, (scale, waves)) in out.iter_mut().zip(&comps) {
            let s: f64 = waves
                .iter()
                .map(|(a, w, ph)| a * (w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + ph).sin())
                .sum();
            *o = scale * s;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::sawtooth_f;
    use crate::Field;

    #[test]
    fn sawtooth_id_delegates() {
        let e = corpus("sawtooth:m=3:p=2", 0).unwrap();
        let spec = SawtoothSpec::new(3, 2.0).unwrap();
        for i in 0..=40 {
            let x = -1.0 + i as f64 / 20.0;
            let (a, b) = (e.grid.eval(&[x]), sawtooth_f(&spec, x));
            assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-12), "x = {x}");
        }
        assert!(e.meta.lip <= 1.0 + 1e-9);
    }

    #[test]
    fn affine_id_is_affine() {
        let e = corpus("affine:n=2:m=1", 5).unwrap();
        let g = &e.grid;
        let at = |x: f64, y: f64| g.eval(&[x, y])[0];
        let mid = at(0.1, -0.3);
        assert!((mid - 0.5 * (at(0.3, -0.5) + at(-0.1, -0.1))).abs() < 1e-12);
    }

    #[test]
    fn random_lip_is_reproducible_and_bounded() {
        let a = corpus("random-lip:n=2:seed=7", 0).unwrap();
        let b = corpus("random-lip:n=2:seed=7", 99).unwrap();
        assert_eq!(a.grid, b.grid);
        let again = lipschitz_estimate(&b.grid, &NormSpec::euclidean(2)).unwrap();
        assert!((again - a.meta.lip).abs() <= 0.05 * a.meta.lip);
        assert!(a.meta.lip <= 1.0 + 1e-9 && a.meta.lip > 0.05);
    }

    #[test]
    fn cutoff_and_errors() {
        let e = corpus("cutoff:radial:n=2", 0).unwrap();
        assert!(e.grid.eval(&[0.0, 0.0])[0].abs() < 1e-12);
        assert!(matches!(corpus("spiral:n=2", 0), Err(Error::UnknownCorpus(_))));
        assert!(corpus("radial:n=2:colour=red", 0).is_err());
        assert!(corpus("sawtooth:p=2", 0).is_err());
        let t = corpus("tensor:n=2:m=2:p=1:k=0.35:eps=0.5:res=17", 0).unwrap();
        assert_eq!(t.grid.m(), 4);
    }
}
