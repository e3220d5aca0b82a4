use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{StageParams, StageSide, StageWorld};

/// Per-subarea state as seen by the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubareaTrace {
    pub occupancy: f64,
    pub crowded: bool,
    pub timer: u32,
}

/// One line of a stage trace: state after detection, before the
/// controller's timer reset, plus the switch decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTraceRow {
    pub tick: u32,
    pub open_stage: StageSide,
    pub subareas: Vec<SubareaTrace>,
    pub panic: u32,
    pub surge: u32,
    pub switched: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    /// Stage switches per tick.
    pub f: f64,
    /// Mean number of agents in panic or surge state per tick.
    pub aps: f64,
    pub switch_count: usize,
    pub switch_log: Vec<u32>,
    pub panic_timeline: Vec<u32>,
    pub surge_timeline: Vec<u32>,
}

impl StageMetrics {
    pub fn from_timelines(panic: Vec<u32>, surge: Vec<u32>, switch_log: Vec<u32>) -> Self {
        let ticks = panic.len().max(1) as f64;
        let flagged: u64 = panic.iter().zip(&surge).map(|(p, s)| u64::from(p + s)).sum();
        Self {
            f: switch_log.len() as f64 / ticks,
            aps: flagged as f64 / ticks,
            switch_count: switch_log.len(),
            switch_log,
            panic_timeline: panic,
            surge_timeline: surge,
        }
    }
}

pub fn run_stage_sim(params: &StageParams, seed: u64) -> Result<StageMetrics> {
    run_stage_sim_traced(params, seed, None)
}

/// As [`run_stage_sim`], handing every tick's trace row to `trace`.
pub fn run_stage_sim_traced(
    params: &StageParams,
    seed: u64,
    mut trace: Option<&mut dyn FnMut(StageTraceRow)>,
) -> Result<StageMetrics> {
    let mut world = StageWorld::build(params, seed)?;
    let n = params.run_length as usize;
    let (mut panic, mut surge) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..params.run_length {
        let (report, row) = world.step_traced(trace.is_some());
        panic.push(report.panic);
        surge.push(report.surge);
        if let (Some(f), Some(row)) = (trace.as_mut(), row) {
            f(row);
        }
    }
    Ok(StageMetrics::from_timelines(panic, surge, world.switch_log().to_vec()))
}
