//! Continuous-space evacuation of a mixed population through four corner
//! gates, under three gate-assignment strategies.
//!
//! Arena coordinates put the origin at the top-left corner with `y`
//! growing downwards, so "top-left" in a scenario description is the
//! corner served by gate `G1`.

mod assign;
mod metrics;
mod movement;
mod scenario;
mod world;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};

pub use assign::{assign_gates, nearest_gate};
pub use metrics::{fairness_index, run_evacuation, run_evacuation_outcome, EvacMetrics, EvacOutcome};
pub use movement::{candidate_positions, choose_move, position_utility, Neighbor};
pub use scenario::{generate_scenario, largest_remainder, Scenario};
pub use world::{EvacTraceRow, EvacWorld};

/// Length of one simulation step in seconds.
pub const TIMESTEP_SECONDS: f64 = 0.48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    Normal,
    Vulnerable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateId {
    G1,
    G2,
    G3,
    G4,
}

impl GateId {
    pub const ALL: [GateId; 4] = [GateId::G1, GateId::G2, GateId::G3, GateId::G4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<GateId> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.index() + 1)
    }
}

impl FromStr for GateId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "G1" => Ok(GateId::G1),
            "G2" => Ok(GateId::G2),
            "G3" => Ok(GateId::G3),
            "G4" => Ok(GateId::G4),
            other => Err(Error::param("gate", format!("unknown gate `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Random gate for everyone.
    #[serde(rename = "RGA")]
    Random,
    /// Vulnerable agents to one designated gate, everyone else to the closest.
    #[serde(rename = "VEGA")]
    VulnerableExclusive,
    /// Closest gate for everyone.
    #[serde(rename = "CGA")]
    Closest,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::VulnerableExclusive, Strategy::Closest];

    pub fn code(self) -> &'static str {
        match self {
            Strategy::Random => "RGA",
            Strategy::VulnerableExclusive => "VEGA",
            Strategy::Closest => "CGA",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RGA" => Ok(Strategy::Random),
            "VEGA" => Ok(Strategy::VulnerableExclusive),
            "CGA" => Ok(Strategy::Closest),
            other => Err(Error::param("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: GateId,
    pub region: Rect,
    pub anchor: Vec2,
}

impl Gate {
    /// The four corner gates of `bounds`, each a `size`-wide square.
    pub fn corners(bounds: Rect, size: f64) -> [Gate; 4] {
        let Rect { min, max } = bounds;
        let mk = |id, ax: f64, ay: f64, sx: f64, sy: f64| Gate {
            id,
            region: Rect::new(ax, ay, ax + sx, ay + sy),
            anchor: Vec2::new(ax, ay),
        };
        [
            mk(GateId::G1, min.x, min.y, size, size),
            mk(GateId::G2, max.x, min.y, -size, size),
            mk(GateId::G3, min.x, max.y, size, -size),
            mk(GateId::G4, max.x, max.y, -size, -size),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvacAgent {
    pub id: usize,
    pub kind: AgentKind,
    pub position: Vec2,
    /// Metres per timestep.
    pub speed: f64,
    pub assigned_gate: GateId,
    /// Tick at which the agent left through its gate.
    pub evac_time: Option<u32>,
}

impl EvacAgent {
    pub fn new(id: usize, kind: AgentKind, position: Vec2, speed: f64) -> Self {
        Self {
            id,
            kind,
            position,
            speed,
            assigned_gate: GateId::G1,
            evac_time: None,
        }
    }

    pub fn evacuated(&self) -> bool {
        self.evac_time.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvacParams {
    pub width: f64,
    pub height: f64,
    pub gate_size: f64,
    pub n_vulnerable: usize,
    pub n_normal: usize,
    pub normal_speed: (f64, f64),
    pub vulnerable_speed: (f64, f64),
    pub personal_radius: f64,
    pub contact_radius: f64,
    pub repulsion_weight: f64,
    pub candidate_count: usize,
    pub designated_gate: GateId,
    /// Under VEGA, keep non-vulnerable agents off the designated gate.
    pub exclusive_gate: bool,
    pub max_ticks: u32,
}

impl Default for EvacParams {
    fn default() -> Self {
        Self {
            width: 100.0,
            height: 100.0,
            gate_size: 5.0,
            n_vulnerable: 340,
            n_normal: 1023,
            normal_speed: (1.0, 1.3),
            vulnerable_speed: (0.5, 0.65),
            personal_radius: 1.2,
            contact_radius: 0.4,
            repulsion_weight: 2.0,
            candidate_count: 16,
            designated_gate: GateId::G1,
            exclusive_gate: true,
            max_ticks: 2000,
        }
    }
}

impl EvacParams {
    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    pub fn population(&self) -> usize {
        self.n_vulnerable + self.n_normal
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("width", self.width)?;
        positive("height", self.height)?;
        positive("gate_size", self.gate_size)?;
        positive("personal_radius", self.personal_radius)?;
        positive("contact_radius", self.contact_radius)?;
        if !(self.repulsion_weight.is_finite() && self.repulsion_weight >= 0.0) {
            return Err(Error::param("repulsion_weight", "must be non-negative"));
        }
        if 2.0 * self.gate_size >= self.width.min(self.height) {
            return Err(Error::param(
                "gate_size",
                "corner gates would overlap; must be under half the arena side",
            ));
        }
        for (name, (lo, hi)) in [
            ("normal_speed", self.normal_speed),
            ("vulnerable_speed", self.vulnerable_speed),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::param(name, format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
            }
        }
        if self.candidate_count == 0 {
            return Err(Error::param("candidate_count", "must be at least 1"));
        }
        if self.population() == 0 {
            return Err(Error::param("n_normal", "population must be non-empty"));
        }
        if self.max_ticks == 0 {
            return Err(Error::param("max_ticks", "must be positive"));
        }
        Ok(())
    }
}
