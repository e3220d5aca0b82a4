use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use crowdsim::evac::{self, EvacParams, EvacWorld, Scenario, Strategy};
use crowdsim::harness::{self, ExperimentConfig, RunReport};
use crowdsim::stage::{self, StageParams, StageWorld};
use crowdsim::Error;

fn to_py(err: Error) -> PyErr {
    if err.is_config() {
        PyValueError::new_err(err.to_string())
    } else {
        PyRuntimeError::new_err(err.to_string())
    }
}

/// Accepts a JSON string or any object `json.dumps` can serialise.
fn json_text(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.extract::<String>() {
        return Ok(s);
    }
    let json = obj.py().import("json")?;
    json.call_method1("dumps", (obj,))?.extract()
}

fn from_json<T: serde::de::DeserializeOwned + Default>(obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    match obj {
        None => Ok(T::default()),
        Some(o) => serde_json::from_str(&json_text(o)?).map_err(|e| PyValueError::new_err(e.to_string())),
    }
}

fn config_of(obj: &Bound<'_, PyAny>) -> PyResult<ExperimentConfig> {
    harness::parse_config_str(&json_text(obj)?).map_err(to_py)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Mean normal evacuation time over mean vulnerable evacuation time.
#[pyfunction]
fn fairness_index(avg_v: f64, avg_n: f64) -> PyResult<f64> {
    evac::fairness_index(avg_v, avg_n).map_err(to_py)
}

/// One evacuation run; returns a dict of metrics.
#[pyfunction]
#[pyo3(signature = (scenario, strategy, seed, params=None))]
fn run_evacuation<'py>(
    py: Python<'py>,
    scenario: &str,
    strategy: &str,
    seed: u64,
    params: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let params: EvacParams = from_json(params)?;
    let m = evac::run_evacuation(parse(scenario)?, parse(strategy)?, &params, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("avg_v", m.avg_v)?;
    d.set_item("avg_n", m.avg_n)?;
    d.set_item("ratio", m.ratio)?;
    d.set_item("avg_all", m.avg_all)?;
    d.set_item("gate_times", m.gate_times.to_vec())?;
    d.set_item("censored", m.censored)?;
    d.set_item("ticks", m.ticks)?;
    Ok(d)
}

/// One stage run; returns F, APS, the switch log and per-tick counts.
#[pyfunction]
#[pyo3(signature = (seed, params=None))]
fn run_stage_sim<'py>(py: Python<'py>, seed: u64, params: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyDict>> {
    let params: StageParams = from_json(params)?;
    let m = stage::run_stage_sim(&params, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("F", m.f)?;
    d.set_item("APS", m.aps)?;
    d.set_item("switch_count", m.switch_count)?;
    d.set_item("switch_log", m.switch_log)?;
    d.set_item("panic", m.panic_timeline)?;
    d.set_item("surge", m.surge_timeline)?;
    Ok(d)
}

fn row_dict<'py>(py: Python<'py>, row: &RunReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", row.mode.to_string())?;
    d.set_item("point", row.point_index)?;
    d.set_item("label", row.point.to_string())?;
    d.set_item("base_seed", row.base_seed)?;
    d.set_item("seed", row.seed)?;
    d.set_item("aggregate", row.aggregate)?;
    d.set_item("runs", row.runs)?;
    for (i, m) in harness::metrics_for(row.mode).iter().enumerate() {
        d.set_item(m.name, row.values.get(i).copied())?;
        if row.aggregate {
            d.set_item(format!("{}_sd", m.name), row.sd.get(i).copied())?;
        }
    }
    d.set_item("error", row.error.clone())?;
    Ok(d)
}

/// Runs a sweep config (JSON text or dict) and returns one dict per row.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyList>> {
    let config = config_of(config)?;
    let rows = harness::run_experiment(&config);
    let list = PyList::empty(py);
    for row in &rows {
        list.append(row_dict(py, row)?)?;
    }
    Ok(list)
}

/// Runs a sweep config and returns the CSV report as text.
#[pyfunction]
fn experiment_csv(config: &Bound<'_, PyAny>) -> PyResult<String> {
    let config = config_of(config)?;
    harness::render_report(&harness::run_experiment(&config)).map_err(to_py)
}

/// Validates a config and returns its canonical JSON form.
#[pyfunction]
fn validate_config(config: &Bound<'_, PyAny>) -> PyResult<String> {
    Ok(config_of(config)?.to_json())
}

/// Step-by-step evacuation.
#[pyclass(module = "pycrowdsim")]
struct EvacSim {
    world: EvacWorld,
    max_ticks: u32,
}

#[pymethods]
impl EvacSim {
    #[new]
    #[pyo3(signature = (scenario, strategy, seed, params=None))]
    fn new(scenario: &str, strategy: &str, seed: u64, params: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let params: EvacParams = from_json(params)?;
        let scenario: Scenario = parse(scenario)?;
        let strategy: Strategy = parse(strategy)?;
        let max_ticks = params.max_ticks;
        let mut world = evac::generate_scenario(scenario, &params, crowdsim::RngStream::new(seed)).map_err(to_py)?;
        world.assign_gates(strategy);
        Ok(Self { world, max_ticks })
    }

    /// Advances one tick; returns the number of agents still inside.
    fn step(&mut self) -> usize {
        self.world.step();
        self.world.remaining()
    }

    /// Steps until everyone is out or the tick limit is reached.
    fn run(&mut self) -> u32 {
        while self.world.remaining() > 0 && self.world.tick() < self.max_ticks {
            self.world.step();
        }
        self.world.tick()
    }

    #[getter]
    fn tick(&self) -> u32 {
        self.world.tick()
    }

    #[getter]
    fn remaining(&self) -> usize {
        self.world.remaining()
    }

    /// `(x, y, evacuated)` per agent, in id order.
    fn positions(&self) -> Vec<(f64, f64, bool)> {
        self.world
            .agents()
            .iter()
            .map(|a| (a.position.x, a.position.y, a.evacuated()))
            .collect()
    }

    /// Exit tick per agent, `None` while still inside.
    fn exit_times(&self) -> Vec<Option<u32>> {
        self.world.agents().iter().map(|a| a.evac_time).collect()
    }

    fn vulnerable(&self) -> Vec<bool> {
        self.world
            .agents()
            .iter()
            .map(|a| a.kind == evac::AgentKind::Vulnerable)
            .collect()
    }
}

/// Step-by-step stage event.
#[pyclass(module = "pycrowdsim")]
struct StageSim {
    world: StageWorld,
}

#[pymethods]
impl StageSim {
    #[new]
    #[pyo3(signature = (seed, params=None))]
    fn new(seed: u64, params: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let params: StageParams = from_json(params)?;
        Ok(Self {
            world: StageWorld::build(&params, seed).map_err(to_py)?,
        })
    }

    /// Advances one tick; returns `(panic, surge, switched_subarea)`.
    fn step(&mut self) -> (u32, u32, Option<usize>) {
        let r = self.world.step();
        (r.panic, r.surge, r.switched)
    }

    #[getter]
    fn tick(&self) -> u32 {
        self.world.tick()
    }

    #[getter]
    fn open_stage(&self) -> String {
        self.world.open_stage().to_string()
    }

    #[getter]
    fn switch_log(&self) -> Vec<u32> {
        self.world.switch_log().to_vec()
    }

    /// `(x, y)` per agent, `None` while inside the bar or restroom.
    fn positions(&self) -> Vec<Option<(i32, i32)>> {
        self.world
            .agents()
            .iter()
            .map(|a| (!self.world.is_off_grid(a.id)).then_some((a.x, a.y)))
            .collect()
    }

    /// Occupied share of walkable patches per subarea.
    fn occupancy(&self) -> Vec<f64> {
        let subs = self.world.subareas();
        (0..stage::Subareas::COUNT)
            .map(|s| match subs.walkable(s) {
                0 => 0.0,
                w => f64::from(self.world.occupancy(s)) / f64::from(w),
            })
            .collect()
    }
}

#[pymodule]
fn pycrowdsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(fairness_index, m)?)?;
    m.add_function(wrap_pyfunction!(run_evacuation, m)?)?;
    m.add_function(wrap_pyfunction!(run_stage_sim, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_csv, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_class::<EvacSim>()?;
    m.add_class::<StageSim>()?;
    Ok(())
}
