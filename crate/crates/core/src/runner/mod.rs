//! Reproducible experiments: a JSON configuration names a command, an input
//! field and a parameter block; [`run`] dispatches it and collects the
//! results together with CSV tables and SVG plots.
//!
//! Identical configurations produce byte-identical artifacts. Only the wall
//! time in `report.json` differs between runs.

mod config;
mod corpus;
mod run;
mod svg;

pub use config::{
    Command, CounterexampleParams, DorronsoroCommand, ExperimentConfig, Exponent, FitParams, Input, ModulusParams,
    MultiplierParams, Plan, UmdFamily, UmdParams, WitnessParams,
};
pub use corpus::{corpus, CorpusEntry, CorpusMeta};
pub use run::{run, set_threads, Artifact, InputRecord, RunOutcome, RunReport, REPORT_SCHEMA, RESULTS_SCHEMA};
pub use svg::{Plot, Series};
