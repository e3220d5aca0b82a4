use std::collections::HashSet;
use std::fmt;
use std::hash::Hash;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::evac::{EvacParams, Scenario, Strategy};
use crate::stage::{MapId, StageParams, StageSide, TripMode};

/// The only schema version this build understands.
pub const SCHEMA_VERSION: u32 = 1;

const KEYS: [&str; 15] = [
    "schema_version",
    "mode",
    "scenario",
    "strategy",
    "evac",
    "map",
    "PN",
    "BRF",
    "PT",
    "ST",
    "SI",
    "stage",
    "seeds",
    "output",
    "trace",
];
const EVAC_ONLY: [&str; 3] = ["scenario", "strategy", "evac"];
const STAGE_ONLY: [&str; 7] = ["map", "PN", "BRF", "PT", "ST", "SI", "stage"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Evac,
    Stage,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Evac => "evac",
            Mode::Stage => "stage",
        })
    }
}

/// Stage parameters that are not swept. Unset fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageOverrides {
    #[serde(rename = "BRT", skip_serializing_if = "Option::is_none")]
    pub brt: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trip_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trip_mode: Option<TripMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_length: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_open: Option<StageSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facility_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crowded_occupancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crowded_neighbors: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterflow_swaps: Option<bool>,
}

impl StageOverrides {
    pub fn apply(&self, p: &mut StageParams) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        set!(
            brt,
            trip_fraction,
            trip_mode,
            run_length,
            initial_open,
            facility_radius,
            crowded_occupancy,
            crowded_neighbors,
            counterflow_swaps
        );
    }
}

/// Values swept on stage runs. Every list is non-empty and duplicate-free.
#[derive(Debug, Clone, PartialEq)]
pub struct StageGrid {
    pub pn: Vec<usize>,
    pub brf: Vec<u32>,
    pub pt: Vec<u32>,
    pub st: Vec<u32>,
    pub si: Vec<u32>,
}

impl Default for StageGrid {
    fn default() -> Self {
        let d = StageParams::default();
        Self {
            pn: vec![d.pn],
            brf: vec![d.brf],
            pt: vec![d.pt],
            st: vec![d.st],
            si: vec![d.si],
        }
    }
}

/// One cell of the parameter product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamPoint {
    Evac {
        scenario: Scenario,
        strategy: Strategy,
    },
    Stage {
        map: MapId,
        pn: usize,
        brf: u32,
        pt: u32,
        st: u32,
        si: u32,
    },
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamPoint::Evac { scenario, strategy } => write!(f, "{scenario}/{}", strategy.code()),
            ParamPoint::Stage {
                map,
                pn,
                brf,
                pt,
                st,
                si,
            } => {
                write!(f, "map {map} PN={pn} BRF={brf} PT={pt} ST={st} SI={si}")
            }
        }
    }
}

/// A validated experiment description with every default filled in.
///
/// Evac fields are empty in stage mode and vice versa.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub mode: Mode,
    pub scenarios: Vec<Scenario>,
    pub strategies: Vec<Strategy>,
    pub evac: EvacParams,
    pub maps: Vec<MapId>,
    pub grid: StageGrid,
    pub stage: StageOverrides,
    /// Base seeds; each run derives its own seed from one of these and the
    /// point index.
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
    /// Directory for per-run JSONL traces; `None` disables tracing.
    pub trace: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parameter points in sweep order: scenario-major then strategy for
    /// evac runs, and map, PN, BRF, PT, ST, SI (innermost) for stage runs.
    pub fn points(&self) -> Vec<ParamPoint> {
        let mut out = Vec::new();
        match self.mode {
            Mode::Evac => {
                for &scenario in &self.scenarios {
                    for &strategy in &self.strategies {
                        out.push(ParamPoint::Evac { scenario, strategy });
                    }
                }
            }
            Mode::Stage => {
                let g = &self.grid;
                for &map in &self.maps {
                    for &pn in &g.pn {
                        for &brf in &g.brf {
                            for &pt in &g.pt {
                                for &st in &g.st {
                                    for &si in &g.si {
                                        out.push(ParamPoint::Stage {
                                            map,
                                            pn,
                                            brf,
                                            pt,
                                            st,
                                            si,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Stage parameters for a stage point, overrides applied.
    pub fn stage_params(&self, point: &ParamPoint) -> Option<StageParams> {
        let ParamPoint::Stage {
            map,
            pn,
            brf,
            pt,
            st,
            si,
        } = *point
        else {
            return None;
        };
        let mut p = StageParams {
            map,
            pn,
            brf,
            pt,
            st,
            si,
            ..StageParams::default()
        };
        self.stage.apply(&mut p);
        Some(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        check_list("seeds", &self.seeds)?;
        match self.mode {
            Mode::Evac => {
                check_list("scenario", &self.scenarios)?;
                check_list("strategy", &self.strategies)?;
                self.evac.validate()?;
            }
            Mode::Stage => {
                check_list("map", &self.maps)?;
                check_list("PN", &self.grid.pn)?;
                check_list("BRF", &self.grid.brf)?;
                check_list("PT", &self.grid.pt)?;
                check_list("ST", &self.grid.st)?;
                check_list("SI", &self.grid.si)?;
                for point in self.points() {
                    self.stage_params(&point).expect("stage point").validate()?;
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON form; parsing it yields an equal config.
    pub fn to_json(&self) -> String {
        let mut m = Map::new();
        m.insert("schema_version".into(), json!(self.schema_version));
        m.insert("mode".into(), json!(self.mode));
        match self.mode {
            Mode::Evac => {
                m.insert("scenario".into(), json!(self.scenarios));
                m.insert("strategy".into(), json!(self.strategies));
                m.insert("evac".into(), json!(self.evac));
            }
            Mode::Stage => {
                m.insert("map".into(), json!(self.maps));
                m.insert("PN".into(), json!(self.grid.pn));
                m.insert("BRF".into(), json!(self.grid.brf));
                m.insert("PT".into(), json!(self.grid.pt));
                m.insert("ST".into(), json!(self.grid.st));
                m.insert("SI".into(), json!(self.grid.si));
                m.insert("stage".into(), json!(self.stage));
            }
        }
        m.insert("seeds".into(), json!(self.seeds));
        if let Some(o) = &self.output {
            m.insert("output".into(), json!(o));
        }
        if let Some(t) = &self.trace {
            m.insert("trace".into(), json!(t));
        }
        serde_json::to_string_pretty(&Value::Object(m)).expect("config serialises")
    }
}

fn check_list<T: PartialEq + Eq + Hash>(key: &str, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::config(key, "must not be empty"));
    }
    let mut seen = HashSet::new();
    if !items.iter().all(|x| seen.insert(x)) {
        return Err(Error::config(key, "contains duplicates"));
    }
    Ok(())
}

fn field<T: DeserializeOwned>(key: &str, v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::config(key, e.to_string()))
}

/// Accepts a single value or an array of values.
fn list<T: DeserializeOwned>(key: &str, v: Value) -> Result<Vec<T>> {
    match v {
        Value::Array(items) => items.into_iter().map(|x| field(key, x)).collect(),
        scalar => Ok(vec![field(key, scalar)?]),
    }
}

/// Parses and validates a config document.
///
/// Selectors (`scenario`, `strategy`, `map`) and the stage grid keys
/// (`PN`, `BRF`, `PT`, `ST`, `SI`) take one value or a list. Unknown keys
/// and keys belonging to the other mode are rejected.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    let Value::Object(mut doc) = value else {
        return Err(Error::config("<document>", "top level must be an object"));
    };
    if let Some(k) = doc.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::config(k.clone(), "unknown key"));
    }
    let mode: Mode = field(
        "mode",
        doc.remove("mode").ok_or_else(|| Error::config("mode", "missing"))?,
    )?;
    let foreign: &[&str] = match mode {
        Mode::Evac => &STAGE_ONLY,
        Mode::Stage => &EVAC_ONLY,
    };
    if let Some(k) = foreign.iter().find(|k| doc.contains_key(**k)) {
        return Err(Error::config(*k, format!("not valid in {mode} mode")));
    }
    let mut take = |key: &str| doc.remove(key);

    let schema_version = take("schema_version").map(|v| field("schema_version", v)).transpose()?;
    let seeds = match take("seeds") {
        Some(v) => list("seeds", v)?,
        None => return Err(Error::config("seeds", "missing")),
    };
    let output = take("output").map(|v| field("output", v)).transpose()?;
    let trace = take("trace").map(|v| field("trace", v)).transpose()?;

    let mut config = ExperimentConfig {
        schema_version: schema_version.unwrap_or(SCHEMA_VERSION),
        mode,
        scenarios: Vec::new(),
        strategies: Vec::new(),
        evac: EvacParams::default(),
        maps: Vec::new(),
        grid: StageGrid {
            pn: Vec::new(),
            brf: Vec::new(),
            pt: Vec::new(),
            st: Vec::new(),
            si: Vec::new(),
        },
        stage: StageOverrides::default(),
        seeds,
        output,
        trace,
    };
    match mode {
        Mode::Evac => {
            config.scenarios = take("scenario").map_or(Ok(Scenario::ALL.to_vec()), |v| list("scenario", v))?;
            config.strategies = take("strategy").map_or(Ok(Strategy::ALL.to_vec()), |v| list("strategy", v))?;
            if let Some(v) = take("evac") {
                config.evac = field("evac", v)?;
            }
        }
        Mode::Stage => {
            let d = StageGrid::default();
            config.maps = take("map").map_or(Ok(vec![StageParams::default().map]), |v| list("map", v))?;
            config.grid = StageGrid {
                pn: take("PN").map_or(Ok(d.pn), |v| list("PN", v))?,
                brf: take("BRF").map_or(Ok(d.brf), |v| list("BRF", v))?,
                pt: take("PT").map_or(Ok(d.pt), |v| list("PT", v))?,
                st: take("ST").map_or(Ok(d.st), |v| list("ST", v))?,
                si: take("SI").map_or(Ok(d.si), |v| list("SI", v))?,
            };
            if let Some(v) = take("stage") {
                config.stage = field("stage", v)?;
            }
        }
    }
    config.validate()?;
    Ok(config)
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}
