use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evac::run_evacuation_outcome;
use crate::rng::mix_seed;
use crate::stage::run_stage_sim_traced;

use super::config::{ExperimentConfig, Mode, ParamPoint};

/// One reported quantity. Integer metrics are printed without decimals
/// on per-run rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metric {
    pub name: &'static str,
    pub integer: bool,
}

const fn real(name: &'static str) -> Metric {
    Metric { name, integer: false }
}

const fn int(name: &'static str) -> Metric {
    Metric { name, integer: true }
}

pub const EVAC_METRICS: [Metric; 9] = [
    real("avg_v"),
    real("avg_n"),
    real("ratio"),
    real("avg_all"),
    int("G1"),
    int("G2"),
    int("G3"),
    int("G4"),
    int("censored"),
];

pub const STAGE_METRICS: [Metric; 3] = [real("F"), real("APS"), int("switch_count")];

pub fn metrics_for(mode: Mode) -> &'static [Metric] {
    match mode {
        Mode::Evac => &EVAC_METRICS,
        Mode::Stage => &STAGE_METRICS,
    }
}

/// One report row: a single run, or the aggregate over a point's seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub point_index: usize,
    pub point: ParamPoint,
    /// Seed from the config; `None` on aggregate rows.
    pub base_seed: Option<u64>,
    /// Seed the run actually used, `mix_seed(base_seed, point_index)`.
    pub seed: Option<u64>,
    pub aggregate: bool,
    /// Successful runs behind this row.
    pub runs: usize,
    /// Metric values in [`metrics_for`] order; means on aggregate rows.
    /// Empty when the row carries an error.
    pub values: Vec<f64>,
    /// Sample standard deviations on aggregate rows (`NaN` below two
    /// runs); empty otherwise.
    pub sd: Vec<f64>,
    pub error: Option<String>,
}

impl RunReport {
    fn column(&self, name: &str) -> Option<usize> {
        metrics_for(self.mode).iter().position(|m| m.name == name)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.values.get(self.column(name)?).copied()
    }

    pub fn metric_sd(&self, name: &str) -> Option<f64> {
        self.sd.get(self.column(name)?).copied()
    }
}

struct RunSpec {
    point_index: usize,
    point: ParamPoint,
    base_seed: u64,
    seed: u64,
}

/// Trace file for one run: `<dir>/<mode>_p<point>_s<base seed>.jsonl`.
pub fn trace_path(dir: &Path, mode: Mode, point_index: usize, base_seed: u64) -> PathBuf {
    dir.join(format!("{mode}_p{point_index:04}_s{base_seed}.jsonl"))
}

struct TraceSink {
    path: PathBuf,
    out: BufWriter<File>,
    failed: Option<std::io::Error>,
}

impl TraceSink {
    fn create(path: PathBuf) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
            failed: None,
        })
    }

    fn line<T: serde::Serialize>(&mut self, row: &T) {
        if self.failed.is_some() {
            return;
        }
        let res = serde_json::to_writer(&mut self.out, row)
            .map_err(std::io::Error::from)
            .and_then(|_| self.out.write_all(b"\n"));
        if let Err(e) = res {
            self.failed = Some(e);
        }
    }

    fn finish(mut self) -> Result<()> {
        if let Some(e) = self.failed.take() {
            return Err(Error::io(&self.path, e));
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn run_one(config: &ExperimentConfig, spec: &RunSpec) -> Result<Vec<f64>> {
    let mut sink = match &config.trace {
        Some(dir) => Some(TraceSink::create(trace_path(
            dir,
            config.mode,
            spec.point_index,
            spec.base_seed,
        ))?),
        None => None,
    };
    let values = match spec.point {
        ParamPoint::Evac { scenario, strategy } => {
            let outcome = match sink.as_mut() {
                Some(s) => {
                    let mut f = |rows: &[crate::evac::EvacTraceRow]| rows.iter().for_each(|r| s.line(r));
                    run_evacuation_outcome(scenario, strategy, &config.evac, spec.seed, Some(&mut f))?
                }
                None => run_evacuation_outcome(scenario, strategy, &config.evac, spec.seed, None)?,
            };
            let m = outcome.metrics()?;
            let mut v = vec![m.avg_v, m.avg_n, m.ratio, m.avg_all];
            v.extend(m.gate_times.iter().map(|&t| f64::from(t)));
            v.push(m.censored as f64);
            v
        }
        ParamPoint::Stage { .. } => {
            let params = config.stage_params(&spec.point).expect("stage point");
            let m = match sink.as_mut() {
                Some(s) => {
                    let mut f = |row: crate::stage::StageTraceRow| s.line(&row);
                    run_stage_sim_traced(&params, spec.seed, Some(&mut f))?
                }
                None => run_stage_sim_traced(&params, spec.seed, None)?,
            };
            vec![m.f, m.aps, m.switch_count as f64]
        }
    };
    if let Some(s) = sink {
        s.finish()?;
    }
    Ok(values)
}

/// Mean and sample standard deviation (`NaN` for fewer than two values).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn aggregate(mode: Mode, point_index: usize, point: ParamPoint, members: &[RunReport]) -> RunReport {
    let ok: Vec<&RunReport> = members.iter().filter(|r| r.error.is_none()).collect();
    let mut row = RunReport {
        mode,
        point_index,
        point,
        base_seed: None,
        seed: None,
        aggregate: true,
        runs: ok.len(),
        values: Vec::new(),
        sd: Vec::new(),
        error: None,
    };
    if ok.is_empty() {
        row.error = Some("no successful runs".into());
        return row;
    }
    for col in 0..metrics_for(mode).len() {
        let xs: Vec<f64> = ok.iter().map(|r| r.values[col]).collect();
        let (m, s) = mean_sd(&xs);
        row.values.push(m);
        row.sd.push(s);
    }
    row
}

/// Runs every parameter point against every seed.
///
/// Runs execute in parallel and share nothing; the result is sorted by
/// (point, base seed) with each point's aggregate row after its runs. A
/// failed run becomes a row with `error` set and the sweep carries on.
pub fn run_experiment(config: &ExperimentConfig) -> Vec<RunReport> {
    let points = config.points();
    let mut specs = Vec::with_capacity(points.len() * config.seeds.len());
    for (point_index, &point) in points.iter().enumerate() {
        for &base_seed in &config.seeds {
            specs.push(RunSpec {
                point_index,
                point,
                base_seed,
                seed: mix_seed(base_seed, point_index as u64),
            });
        }
    }
    let mut runs: Vec<RunReport> = specs
        .par_iter()
        .map(|spec| {
            let (values, error) = match run_one(config, spec) {
                Ok(v) => (v, None),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            RunReport {
                mode: config.mode,
                point_index: spec.point_index,
                point: spec.point,
                base_seed: Some(spec.base_seed),
                seed: Some(spec.seed),
                aggregate: false,
                runs: usize::from(error.is_none()),
                values,
                sd: Vec::new(),
                error,
            }
        })
        .collect();
    runs.sort_by_key(|r| (r.point_index, r.base_seed));

    let mut out = Vec::with_capacity(runs.len() + points.len());
    for chunk in runs.chunk_by(|a, b| a.point_index == b.point_index) {
        let first = &chunk[0];
        let agg = aggregate(config.mode, first.point_index, first.point, chunk);
        out.extend_from_slice(chunk);
        out.push(agg);
    }
    out
}
