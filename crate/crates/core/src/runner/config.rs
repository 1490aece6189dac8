//! Experiment configuration and per-command parameter blocks.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::banach::MAX_ENUM_DEPTH;
use crate::dorronsoro::DorronsoroParams;
use crate::geometry::{NormSpec, TargetNorm};
use crate::harmonic::MultiplierSpec;
use crate::{serde_ext, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Fit,
    Modulus,
    Witness,
    Dorronsoro,
    Counterexample,
    Umd,
    Multiplier,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Fit,
        Command::Modulus,
        Command::Witness,
        Command::Dorronsoro,
        Command::Counterexample,
        Command::Umd,
        Command::Multiplier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Modulus => "modulus",
            Command::Witness => "witness",
            Command::Dorronsoro => "dorronsoro",
            Command::Counterexample => "counterexample",
            Command::Umd => "umd",
            Command::Multiplier => "multiplier",
        }
    }

    fn needs_input(self) -> bool {
        !matches!(self, Command::Counterexample | Command::Umd)
    }
}

/// Where the input field comes from: `{"builtin": "<id>"}` or
/// `{"path": "<file>"}` (binary container, or CSV by extension).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Input {
    Builtin(String),
    Path(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Input>,
    /// Command-specific block, validated by [`ExperimentConfig::validate`].
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Exponent wrapper so lists may contain `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(#[serde(with = "serde_ext::exponent")] pub f64);

fn two() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    /// Ball centre; the origin when absent.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub radius: f64,
    /// Ball norm; Euclidean when absent.
    #[serde(default)]
    pub norm: Option<NormSpec>,
    #[serde(default = "two", with = "serde_ext::exponent")]
    pub p: f64,
    #[serde(default)]
    pub nodes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusParams {
    #[serde(default)]
    pub norm: Option<NormSpec>,
    pub epsilons: Vec<f64>,
    #[serde(default = "two", with = "serde_ext::exponent")]
    pub p: f64,
    pub r_min: f64,
    #[serde(default)]
    pub center_samples: Option<usize>,
    #[serde(default)]
    pub max_centers: Option<usize>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub lip: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessParams {
    #[serde(default)]
    pub norm: Option<NormSpec>,
    pub epsilon: f64,
    #[serde(default = "two", with = "serde_ext::exponent")]
    pub p: f64,
    pub u_min: f64,
    #[serde(default)]
    pub center_samples: Option<usize>,
    #[serde(default)]
    pub candidates: Option<usize>,
    #[serde(default)]
    pub sub_centers: Option<usize>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub lip: Option<f64>,
    /// Also run the exhaustive scan at the same `ε` for comparison.
    #[serde(default)]
    pub compare_search: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DorronsoroCommand {
    pub defect: DorronsoroParams,
    /// Smoothness for the Riesz-potential comparison.
    #[serde(default)]
    pub s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    #[serde(default = "default_ms")]
    pub m: Vec<usize>,
    #[serde(default = "two", with = "serde_ext::exponent")]
    pub p: f64,
    #[serde(default = "default_qs")]
    pub q: Vec<Exponent>,
    /// Dyadic depth; `m + 2` when absent.
    #[serde(default)]
    pub depth: Option<u32>,
}

fn default_ms() -> Vec<usize> {
    vec![1, 2, 3, 4]
}
fn default_qs() -> Vec<Exponent> {
    vec![Exponent(2.0), Exponent(f64::INFINITY)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UmdFamily {
    /// Seeded Gaussian martingales with values in `target`.
    Random {
        target: TargetNorm,
        #[serde(default = "default_members")]
        members: usize,
    },
    /// The `L_p(μ)`-valued indicator martingale at every depth.
    Pisier {
        #[serde(with = "serde_ext::exponent")]
        p_space: f64,
    },
}

fn default_members() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UmdParams {
    pub family: UmdFamily,
    #[serde(with = "serde_ext::exponent")]
    pub p: f64,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierParams {
    pub multiplier: MultiplierSpec,
    #[serde(default = "two", with = "serde_ext::exponent")]
    pub p: f64,
}

/// A configuration with its parameter block decoded.
#[derive(Clone, Debug)]
pub enum Plan {
    Fit(FitParams),
    Modulus(ModulusParams),
    Witness(WitnessParams),
    Dorronsoro(DorronsoroCommand),
    Counterexample(CounterexampleParams),
    Umd(UmdParams),
    Multiplier(MultiplierParams),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Decodes and checks the parameter block against the command.
    pub fn validate(&self) -> Result<Plan> {
        if self.command.needs_input() && self.input.is_none() {
            return Err(Error::param(format!("command `{}` needs an input", self.command.name())));
        }
        let params = if self.params.is_null() { serde_json::json!({}) } else { self.params.clone() };
        let decode_err = |e: serde_json::Error| Error::param(format!("params for `{}`: {e}", self.command.name()));
        let plan = match self.command {
            Command::Fit => Plan::Fit(serde_json::from_value(params).map_err(decode_err)?),
            Command::Modulus => {
                let m: ModulusParams = serde_json::from_value(params).map_err(decode_err)?;
                if m.epsilons.is_empty() {
                    return Err(Error::param("modulus: `epsilons` is empty"));
                }
                Plan::Modulus(m)
            }
            Command::Witness => Plan::Witness(serde_json::from_value(params).map_err(decode_err)?),
            Command::Dorronsoro => {
                let d: DorronsoroCommand = serde_json::from_value(params).map_err(decode_err)?;
                d.defect.validate()?;
                Plan::Dorronsoro(d)
            }
            Command::Counterexample => {
                let c: CounterexampleParams = serde_json::from_value(params).map_err(decode_err)?;
                if c.m.is_empty() || c.q.is_empty() {
                    return Err(Error::param("counterexample: `m` and `q` must be non-empty"));
                }
                Plan::Counterexample(c)
            }
            Command::Umd => {
                let u: UmdParams = serde_json::from_value(params).map_err(decode_err)?;
                let cap = match u.family {
                    UmdFamily::Random { .. } => MAX_ENUM_DEPTH,
                    UmdFamily::Pisier { .. } => 10,
                };
                if u.depth == 0 || u.depth > cap {
                    return Err(Error::param(format!("umd: depth must lie in 1..={cap}")));
                }
                Plan::Umd(u)
            }
            Command::Multiplier => Plan::Multiplier(serde_json::from_value(params).map_err(decode_err)?),
        };
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let ok = r#"{"command": "umd", "params": {"family": {"kind": "random", "target": {"kind": "lq", "m": 1, "q": 2}}, "p": 2, "depth": 3}}"#;
        ExperimentConfig::from_json(ok).unwrap();
        let extra = ok.replace(r#""depth": 3"#, r#""depth": 3, "colour": 1"#);
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let top = ok.replacen('{', r#"{"verbose": true, "#, 1);
        assert!(ExperimentConfig::from_json(&top).is_err());
    }

    #[test]
    fn missing_input_is_a_validation_error() {
        let e = ExperimentConfig::from_json(r#"{"command": "fit"}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn infinite_exponents_in_lists() {
        let c: CounterexampleParams = serde_json::from_str(r#"{"q": [2, "inf"]}"#).unwrap();
        assert!(c.q[1].0.is_infinite());
        assert_eq!(c.m, vec![1, 2, 3, 4]);
    }
}
