//! Experiment configuration, seeded sweeps and CSV/JSONL reporting.
//!
//! A config names a mode, the parameter values to sweep and a list of base
//! seeds. Every (point, seed) pair is one run, seeded with
//! `mix_seed(base_seed, point_index)`.

mod config;
mod experiment;
mod report;

pub use config::{
    parse_config, parse_config_str, ExperimentConfig, Mode, ParamPoint, StageGrid, StageOverrides, SCHEMA_VERSION,
};
pub use experiment::{
    mean_sd, metrics_for, run_experiment, trace_path, Metric, RunReport, EVAC_METRICS, STAGE_METRICS,
};
pub use report::{format_float, render_report, report_header, write_report};
