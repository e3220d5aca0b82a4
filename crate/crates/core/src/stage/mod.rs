//! Two-stage event on a 51×51 patch grid.
//!
//! Attendees walk to the open stage and stop within their comfort distance,
//! leave on bar/restroom trips, and become *surging* or *panicking* when
//! they stay blocked for longer than a threshold. Subareas that stay
//! crowded trigger a switch of the performing stage.

mod layout;
mod metrics;
mod world;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use layout::{MapLayout, Patch, PatchRect, Subareas, GRID_SIZE};
pub use metrics::{run_stage_sim, run_stage_sim_traced, StageMetrics, StageTraceRow, SubareaTrace};
pub use world::{StageWorld, StepReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapId {
    A,
    B,
    C,
}

impl MapId {
    pub const ALL: [MapId; 3] = [MapId::A, MapId::B, MapId::C];
}

impl fmt::Display for MapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for MapId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(MapId::A),
            "B" => Ok(MapId::B),
            "C" => Ok(MapId::C),
            other => Err(Error::param("map", format!("unknown map `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StageSide {
    Left,
    Right,
}

impl StageSide {
    pub fn other(self) -> StageSide {
        match self {
            StageSide::Left => StageSide::Right,
            StageSide::Right => StageSide::Left,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StageSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Destination {
    LeftStage,
    RightStage,
    Bar,
    Restroom,
}

impl Destination {
    pub fn stage(side: StageSide) -> Destination {
        match side {
            StageSide::Left => Destination::LeftStage,
            StageSide::Right => Destination::RightStage,
        }
    }

    pub fn is_stage(self) -> bool {
        matches!(self, Destination::LeftStage | Destination::RightStage)
    }

    pub fn is_facility(self) -> bool {
        !self.is_stage()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activity {
    ToStage,
    AtStage,
    ToFacility,
    AtFacility,
    Hesitating,
}

impl Activity {
    pub fn on_trip(self) -> bool {
        matches!(self, Activity::ToFacility | Activity::AtFacility)
    }
}

/// How bar/restroom trips are started every `brf` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripMode {
    /// Each eligible agent leaves independently with probability
    /// `trip_fraction`.
    Independent,
    /// Exactly `round(trip_fraction * eligible)` randomly chosen agents leave.
    Quota,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAgent {
    pub id: usize,
    pub x: i32,
    pub y: i32,
    /// Patch moves per tick, 1 or 2.
    pub speed: u8,
    /// Preferred maximum distance from the stage, in patches.
    pub comfort_distance: u8,
    /// Ticks spent hesitating after a stage switch.
    pub hesitation: u8,
    pub activity: Activity,
    pub destination: Destination,
    pub block_counter_stage: u32,
    pub block_counter_facility: u32,
    pub surge_flag: bool,
    pub panic_flag: bool,
    pub dwell_remaining: u32,
    pub hesitation_remaining: u32,
}

impl StageAgent {
    pub fn flagged(&self) -> bool {
        self.surge_flag || self.panic_flag
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageParams {
    /// Number of attendees.
    #[serde(rename = "PN")]
    pub pn: usize,
    /// Ticks between trip-initiation rounds.
    #[serde(rename = "BRF")]
    pub brf: u32,
    /// Ticks spent at the bar or restroom.
    #[serde(rename = "BRT")]
    pub brt: u32,
    pub trip_fraction: f64,
    pub trip_mode: TripMode,
    /// Blocked ticks before a facility-bound agent panics.
    #[serde(rename = "PT")]
    pub pt: u32,
    /// Blocked ticks before a stage-bound agent surges.
    #[serde(rename = "ST")]
    pub st: u32,
    /// Crowded ticks a subarea must exceed before a switch.
    #[serde(rename = "SI")]
    pub si: u32,
    pub run_length: u32,
    pub map: MapId,
    pub initial_open: StageSide,
    /// Distance at which a facility counts as reached.
    pub facility_radius: f64,
    /// Occupied share of walkable patches above which a subarea is dense.
    pub crowded_occupancy: f64,
    /// Crowded 4-neighbours needed alongside the timed-out subarea.
    pub crowded_neighbors: usize,
    /// Let two walkers trade patches when that brings both closer to their
    /// destinations.
    pub counterflow_swaps: bool,
}

impl Default for StageParams {
    fn default() -> Self {
        Self {
            pn: 500,
            brf: 50,
            brt: 50,
            trip_fraction: 0.4,
            trip_mode: TripMode::Independent,
            pt: 10,
            st: 30,
            si: 10,
            run_length: 5000,
            map: MapId::C,
            initial_open: StageSide::Right,
            facility_radius: 1.5,
            crowded_occupancy: 0.70,
            crowded_neighbors: 2,
            counterflow_swaps: true,
        }
    }
}

impl StageParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: u64| {
            if v > 0 {
                Ok(())
            } else {
                Err(Error::param(name, "must be positive"))
            }
        };
        positive("PN", self.pn as u64)?;
        positive("BRF", self.brf.into())?;
        positive("BRT", self.brt.into())?;
        positive("PT", self.pt.into())?;
        positive("ST", self.st.into())?;
        positive("SI", self.si.into())?;
        positive("run_length", self.run_length.into())?;
        if !(0.0..=1.0).contains(&self.trip_fraction) {
            return Err(Error::param("trip_fraction", "must lie in [0, 1]"));
        }
        if !(self.facility_radius.is_finite() && self.facility_radius >= 1.0) {
            return Err(Error::param("facility_radius", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.crowded_occupancy) {
            return Err(Error::param("crowded_occupancy", "must lie in [0, 1)"));
        }
        if !(1..=4).contains(&self.crowded_neighbors) {
            return Err(Error::param("crowded_neighbors", "must lie in 1..=4"));
        }
        Ok(())
    }
}
