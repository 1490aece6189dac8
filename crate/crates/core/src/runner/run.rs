//! Dispatch of a validated configuration to the library, and the files a
//! run leaves behind.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{Command, ExperimentConfig, Input, Plan, UmdFamily};
use super::corpus::corpus;
use super::svg::Plot;
use crate::affine::{best_affine_with, residual_error, sample_on_rule, BallRule, FitOptions, QuadratureConfig};
use crate::banach::{beta_for_martingale, pisier_lp_martingale, umd_depth_trace, umd_estimates, MartingaleFamily};
use crate::dorronsoro::dorronsoro_report_with_samples;
use crate::geometry::{lipschitz_estimate, read_grid, write_grid_binary, Ball, GridFunction, NormSpec, TargetNorm};
use crate::harmonic::{apply_multiplier, SpectralField};
use crate::moduli::{
    certify_upper_bound, find_affine_ball, search_modulus, ModulusQuery, PipelineParams, SawtoothSpec,
};
use crate::{Error, Result};

/// Identifies the layout of `report.json`.
pub const REPORT_SCHEMA: &str = "affinescope/run-report/v1";
/// Identifies the layout of `results.json`.
pub const RESULTS_SCHEMA: &str = "affinescope/results/v1";

#[derive(Clone, Debug, Serialize)]
pub struct InputRecord {
    pub source: String,
    /// SHA-256 of the field in the binary container format.
    pub content_sha256: String,
    pub dim: usize,
    pub target: TargetNorm,
    pub resolution: Vec<usize>,
    /// Lattice Lipschitz estimate with respect to `‖·‖₂`.
    pub lip: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub input: Option<InputRecord>,
    /// Same payload as `results.json`.
    pub results: Value,
    pub artifacts: Vec<String>,
    /// The only field that varies between identical runs.
    pub wall_time_seconds: f64,
}

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct RunOutcome {
    pub report: RunReport,
    /// `results.json` first, then CSV tables, SVG plots and grids.
    pub artifacts: Vec<Artifact>,
}

impl RunOutcome {
    pub fn artifact(&self, name: &str) -> Option<&[u8]> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| a.bytes.as_slice())
    }

    /// Writes every artifact and `report.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.artifacts.len() + 1);
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.bytes)?;
            written.push(path);
        }
        let path = dir.join("report.json");
        std::fs::write(&path, pretty(&self.report)?)?;
        written.push(path);
        Ok(written)
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Caps the worker pool used by parallel kernels. Results do not depend on
/// the value. Has an effect only before the first parallel call.
pub fn set_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn load_input(input: &Input, seed: u64) -> Result<(GridFunction, InputRecord)> {
    let (grid, source) = match input {
        Input::Builtin(id) => (corpus(id, seed)?.grid, format!("builtin:{id}")),
        Input::Path(path) => {
            let grid = read_grid(path).map_err(|e| match e {
                Error::Io(io) => Error::param(format!("cannot read input {}: {io}", path.display())),
                other => other,
            })?;
            (grid, format!("path:{}", path.display()))
        }
    };
    let mut bytes = Vec::new();
    write_grid_binary(&grid, &mut bytes)?;
    let record = InputRecord {
        source,
        content_sha256: hex::encode(Sha256::digest(&bytes)),
        dim: grid.dim(),
        target: grid.target().clone(),
        resolution: grid.resolution().to_vec(),
        lip: lipschitz_estimate(&grid, &NormSpec::euclidean(grid.dim()))?,
    };
    Ok((grid, record))
}

struct Output {
    results: Value,
    artifacts: Vec<Artifact>,
}

impl Output {
    fn new(results: Value) -> Self {
        Output { results, artifacts: Vec::new() }
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.artifacts.push(Artifact { name: name.into(), bytes });
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: Plot) {
        self.artifacts.push(Artifact { name: name.into(), bytes: plot.render().into_bytes() });
    }
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        v.to_string()
    }
}

/// Runs one experiment. Everything except the report's wall time is a pure
/// function of the configuration and the input.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let plan = config.validate()?;
    let input = match &config.input {
        Some(i) if !matches!(config.command, Command::Counterexample | Command::Umd) => Some(load_input(i, config.seed)?),
        _ => None,
    };
    let grid = input.as_ref().map(|(g, _)| g);
    let out = match plan {
        Plan::Fit(p) => fit(grid.expect("validated"), &p, config.seed)?,
        Plan::Modulus(p) => modulus(grid.expect("validated"), &p, config.seed)?,
        Plan::Witness(p) => witness(grid.expect("validated"), &p, config.seed)?,
        Plan::Dorronsoro(p) => dorronsoro(grid.expect("validated"), &p)?,
        Plan::Counterexample(p) => counterexample(&p)?,
        Plan::Umd(p) => umd(&p, config.seed)?,
        Plan::Multiplier(p) => multiplier(grid.expect("validated"), &p)?,
    };
    let results = json!({
        "schema": RESULTS_SCHEMA,
        "command": config.command,
        "results": out.results,
    });
    let mut artifacts = vec![Artifact { name: "results.json".into(), bytes: pretty(&results)? }];
    artifacts.extend(out.artifacts);
    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        input: input.map(|(_, r)| r),
        results,
        artifacts: artifacts.iter().map(|a| a.name.clone()).chain(["report.json".to_string()]).collect(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { report, artifacts })
}

fn fit(grid: &GridFunction, p: &super::config::FitParams, seed: u64) -> Result<Output> {
    let n = grid.dim();
    let ball = Ball::new(
        p.center.clone().unwrap_or_else(|| vec![0.0; n]),
        p.radius,
        p.norm.clone().unwrap_or_else(|| NormSpec::euclidean(n)),
    )?;
    let quadrature = QuadratureConfig { nodes: p.nodes.unwrap_or(QuadratureConfig::default().nodes), seed };
    let report = best_affine_with(grid, &ball, p.p, &FitOptions { quadrature: quadrature.clone(), ..Default::default() })?;
    // Independent check on a denser, differently seeded rule.
    let check = QuadratureConfig { nodes: 4 * quadrature.nodes, seed: crate::rng::derive_seed(seed, 1) };
    let rule = BallRule::for_norm(&ball.norm, &check)?;
    let values = sample_on_rule(grid, &ball.center, ball.radius, &rule)?;
    let validated = residual_error(&rule, &values, grid.target(), &report.map, &ball.center, ball.radius, p.p);
    let mut out = Output::new(json!({ "fit": report, "validated_error": validated }));
    out.csv(
        "fit.csv",
        &["p", "error", "validated_error", "iterations", "gap", "converged"],
        [vec![num(report.p), num(report.error), num(validated), report.iterations.to_string(), num(report.gap), report.converged.to_string()]],
    )?;
    Ok(out)
}

fn modulus(grid: &GridFunction, p: &super::config::ModulusParams, seed: u64) -> Result<Output> {
    let norm = p.norm.clone().unwrap_or_else(|| NormSpec::euclidean(grid.dim()));
    let mut searches = Vec::with_capacity(p.epsilons.len());
    for &epsilon in &p.epsilons {
        let mut q = ModulusQuery::new(epsilon, p.p, p.r_min);
        q.center_samples = p.center_samples;
        q.max_centers = p.max_centers.unwrap_or(q.max_centers);
        q.nodes = p.nodes.unwrap_or(q.nodes);
        q.lip = p.lip;
        q.seed = seed;
        searches.push(search_modulus(grid, &norm, &q)?);
    }
    let mut out = Output::new(json!({ "searches": searches }));
    let level_rows = searches.iter().flat_map(|s| {
        s.levels.iter().map(move |l| {
            vec![
                num(s.epsilon),
                l.level.to_string(),
                num(l.radius),
                l.centers.to_string(),
                num(l.min_relative_error),
                l.accepted.to_string(),
            ]
        })
    });
    out.csv("modulus_levels.csv", &["epsilon", "level", "radius", "centers", "min_relative_error", "accepted"], level_rows)?;
    let curve: Vec<(f64, f64)> = searches.iter().filter_map(|s| Some((s.epsilon, s.radius()?))).collect();
    out.csv(
        "radius_vs_epsilon.csv",
        &["epsilon", "radius"],
        searches.iter().map(|s| vec![num(s.epsilon), s.radius().map(num).unwrap_or_default()]),
    )?;
    out.svg("radius_vs_epsilon.svg", Plot::new("Largest certified radius", "epsilon", "radius").log_log().series("search", curve));
    Ok(out)
}

fn witness(grid: &GridFunction, p: &super::config::WitnessParams, seed: u64) -> Result<Output> {
    let norm = p.norm.clone().unwrap_or_else(|| NormSpec::euclidean(grid.dim()));
    let mut params = PipelineParams::new(p.u_min);
    params.center_samples = p.center_samples;
    params.candidates = p.candidates.unwrap_or(params.candidates);
    params.sub_centers = p.sub_centers.unwrap_or(params.sub_centers);
    params.nodes = p.nodes.unwrap_or(params.nodes);
    params.lip = p.lip;
    params.seed = seed;
    let result = find_affine_ball(grid, &norm, p.epsilon, p.p, &params)?;
    let search = if p.compare_search {
        let mut q = ModulusQuery::new(p.epsilon, p.p, p.u_min / grid.dim() as f64);
        q.center_samples = p.center_samples;
        q.nodes = params.nodes;
        q.lip = p.lip;
        q.seed = seed;
        Some(search_modulus(grid, &norm, &q)?)
    } else {
        None
    };
    let w = &result.witness;
    let mut out = Output::new(json!({ "pipeline": result, "search": search }));
    let mut header: Vec<String> = (0..grid.dim()).map(|i| format!("center_{i}")).collect();
    header.extend(["radius", "relative_error", "validated_relative_error", "linear_norm_ok", "met"].map(String::from));
    let mut row: Vec<String> = w.center.iter().map(|&c| num(c)).collect();
    row.extend([
        num(w.radius),
        num(w.relative_error),
        num(result.validated_relative_error),
        w.linear_norm_ok.to_string(),
        result.met.to_string(),
    ]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("witness.csv", &header, [row])?;
    Ok(out)
}

fn dorronsoro(grid: &GridFunction, p: &super::config::DorronsoroCommand) -> Result<Output> {
    let (report, evaluation) = dorronsoro_report_with_samples(grid, &p.defect, p.s)?;
    let n = grid.dim();
    let mut out = Output::new(json!({ "report": report, "evaluation": evaluation }));
    let mut header: Vec<String> = (0..n).map(|i| format!("x_{i}")).collect();
    header.extend(["u", "defect", "weight"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "defects.csv",
        &header,
        evaluation.samples.iter().map(|s| {
            let mut r: Vec<String> = s.x.iter().map(|&v| num(v)).collect();
            r.extend([num(s.u), num(s.defect), num(s.weight)]);
            r
        }),
    )?;
    // Mean defect per scale, in increasing u.
    let mut by_scale: Vec<(f64, f64, usize)> = Vec::new();
    for s in &evaluation.samples {
        match by_scale.iter_mut().find(|(u, ..)| *u == s.u) {
            Some(e) => {
                e.1 += s.defect;
                e.2 += 1;
            }
            None => by_scale.push((s.u, s.defect, 1)),
        }
    }
    by_scale.sort_by(|a, b| a.0.total_cmp(&b.0));
    let curve = by_scale.iter().map(|&(u, d, c)| (u, d / c as f64)).collect();
    out.svg("defect_vs_scale.svg", Plot::new("Mean affine defect", "u", "mean defect").log_log().series("defect", curve));
    Ok(out)
}

fn counterexample(p: &super::config::CounterexampleParams) -> Result<Output> {
    let mut certificates = Vec::new();
    for &m in &p.m {
        for q in &p.q {
            let spec = SawtoothSpec::new(m, p.p)?;
            let depth = p.depth.unwrap_or(m as u32 + 2).min(m as u32 + 2);
            certificates.push(certify_upper_bound(spec, q.0, depth)?);
        }
    }
    let violations: usize = certificates.iter().map(|c| c.violations).sum();
    let mut out = Output::new(json!({ "certificates": certificates, "violations": violations }));
    let rows = certificates.iter().flat_map(|c| {
        c.rows.iter().map(move |r| {
            vec![
                c.m.to_string(),
                num(c.q),
                r.level.to_string(),
                num(r.a),
                num(r.b),
                num(r.error),
                num(r.bound),
                num(r.normalized),
                r.violation.to_string(),
            ]
        })
    });
    out.csv("sawtooth_table.csv", &["m", "q", "level", "a", "b", "error", "bound", "normalized", "violation"], rows)?;
    let mut plot = Plot::new("Sawtooth error against the lower bound", "(b - a)/2", "error / bound").log_log();
    for c in &certificates {
        let pts = c.rows.iter().map(|r| ((r.b - r.a) / 2.0, r.error / r.bound)).collect();
        plot = plot.series(&format!("m={} q={}", c.m, num(c.q)), pts);
    }
    out.svg("sawtooth_ratio.svg", plot);
    Ok(out)
}

fn umd(p: &super::config::UmdParams, seed: u64) -> Result<Output> {
    let mut rows: Vec<[f64; 4]> = Vec::with_capacity(p.depth);
    let results = match &p.family {
        UmdFamily::Random { target, members } => {
            let family = MartingaleFamily::new(target.clone(), *members, seed);
            let trace = umd_depth_trace(&family, p.p, p.depth)?;
            for (d, [b, plus, minus]) in trace.iter().enumerate() {
                rows.push([(d + 1) as f64, b.value, plus.value, minus.value]);
            }
            json!({ "family": family, "estimates": trace.last().expect("depth ≥ 1") })
        }
        UmdFamily::Pisier { p_space } => {
            let mut best = [1.0_f64; 3];
            let mut witness = None;
            for k in 1..=p.depth {
                let mart = pisier_lp_martingale(k, *p_space)?;
                let e = umd_estimates(&mart, p.p)?;
                if e.beta.0 > best[0] || witness.is_none() {
                    witness = Some(beta_for_martingale(&mart, p.p)?);
                }
                best = [best[0].max(e.beta.0), best[1].max(e.plus), best[2].max(e.minus)];
                rows.push([k as f64, best[0], best[1], best[2]]);
            }
            json!({ "p_space": p_space, "beta": witness, "beta_plus": best[1], "beta_minus": best[2] })
        }
    };
    let mut out = Output::new(json!({ "p": super::config::Exponent(p.p), "summary": results, "trace": rows }));
    out.csv(
        "umd_depth.csv",
        &["depth", "beta_p", "beta_p_plus", "beta_p_minus"],
        rows.iter().map(|r| vec![r[0].to_string(), num(r[1]), num(r[2]), num(r[3])]),
    )?;
    let series = |i: usize| rows.iter().map(|r| (r[0], r[i])).collect();
    out.svg(
        "umd_depth.svg",
        Plot::new("UMD lower bounds", "depth", "estimate")
            .series("beta_p", series(1))
            .series("beta_p^+", series(2))
            .series("beta_p^-", series(3)),
    );
    Ok(out)
}

/// `(mean over nodes of ‖v‖^p)^{1/p}`.
fn lattice_lp(g: &GridFunction, p: f64) -> f64 {
    let norms = (0..g.len()).map(|i| g.target().norm(g.value(i)));
    if p.is_infinite() {
        norms.fold(0.0, f64::max)
    } else {
        (norms.map(|v| v.powf(p)).sum::<f64>() / g.len() as f64).powf(1.0 / p)
    }
}

fn multiplier(grid: &GridFunction, p: &super::config::MultiplierParams) -> Result<Output> {
    p.multiplier.validate(grid.dim())?;
    let image = apply_multiplier(&SpectralField::from_grid(grid), &p.multiplier)?.to_grid()?;
    let (a, b) = (lattice_lp(grid, p.p), lattice_lp(&image, p.p));
    let ratio = if a == 0.0 { 0.0 } else { b / a };
    let mut out = Output::new(json!({
        "multiplier": p.multiplier,
        "p": super::config::Exponent(p.p),
        "input_lp": a,
        "output_lp": b,
        "ratio": ratio,
    }));
    let mut bytes = Vec::new();
    write_grid_binary(&image, &mut bytes)?;
    out.artifacts.push(Artifact { name: "multiplier_output.afsc".into(), bytes });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn umd_scalar_p2_is_one() {
        let c = config(r#"{"command": "umd", "params": {"family": {"kind": "random", "target": {"kind": "lq", "m": 1, "q": 2}}, "p": 2, "depth": 4}}"#);
        let o = run(&c).unwrap();
        let v = &o.report.results["results"]["summary"]["estimates"][0]["value"];
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-12, "{v}");
        assert!(o.artifact("umd_depth.csv").is_some() && o.artifact("umd_depth.svg").is_some());
    }

    #[test]
    fn identical_configs_give_identical_artifacts() {
        let c = config(
            r#"{"command": "fit", "input": {"builtin": "random-lip:n=2:seed=3"}, "params": {"radius": 0.5, "p": 4, "nodes": 512}, "seed": 9}"#,
        );
        let (a, b) = (run(&c).unwrap(), run(&c).unwrap());
        assert_eq!(a.artifacts.len(), b.artifacts.len());
        for (x, y) in a.artifacts.iter().zip(&b.artifacts) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.bytes, y.bytes, "{}", x.name);
        }
        assert_eq!(a.report.input.as_ref().unwrap().content_sha256.len(), 64);
    }

    #[test]
    fn missing_file_is_a_validation_error() {
        let c = config(r#"{"command": "fit", "input": {"path": "/nonexistent/f.afsc"}}"#);
        let e = run(&c).err().unwrap();
        assert_eq!(e.exit_code(), 2, "{e}");
    }
}
