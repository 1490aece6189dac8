use std::path::PathBuf;
use std::process::ExitCode;

use affinescope::runner::{run, set_threads, Command, ExperimentConfig};
use affinescope::{Error, Result};
use clap::Parser;

/// Run one experiment described by a JSON configuration.
///
/// Exit status: 0 on success, 2 when the configuration or input is invalid,
/// 3 when a numerical routine fails to converge. Set AFFINESCOPE_LOG
/// (e.g. `info`, `debug`) for progress messages.
#[derive(Parser)]
#[command(name = "affinescope", version, about)]
struct Cli {
    /// fit | modulus | witness | dorronsoro | counterexample | umd | multiplier
    command: String,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides the configuration, defaults to `affinescope-out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let command = Command::ALL
        .into_iter()
        .find(|c| c.name() == cli.command)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown command `{}`", cli.command)))?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Format("configuration must be a JSON object".into()))?;
    match obj.get("command") {
        None => {
            obj.insert("command".into(), serde_json::to_value(command)?);
        }
        Some(c) if *c != serde_json::to_value(command)? => {
            return Err(Error::InvalidParameter(format!("configuration is for command {c}, not `{}`", cli.command)));
        }
        Some(_) => {}
    }
    let mut config: ExperimentConfig = serde_json::from_value(value)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("AFFINESCOPE_LOG", "warn")).init();
    let outcome = (|| -> Result<PathBuf> {
        let config = load(&cli)?;
        if let Some(t) = cli.threads {
            set_threads(t)?;
        }
        let outcome = run(&config)?;
        let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("affinescope-out"));
        for path in outcome.write_to(&dir)? {
            log::info!("wrote {}", path.display());
        }
        Ok(dir)
    })();
    match outcome {
        Ok(dir) => {
            println!("{}", dir.join("report.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
