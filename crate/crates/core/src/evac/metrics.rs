use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::{generate_scenario, AgentKind, EvacParams, EvacTraceRow, GateId, Scenario, Strategy};

/// Summary of one evacuation run. Times are in ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvacMetrics {
    pub avg_v: f64,
    pub avg_n: f64,
    /// `avg_n / avg_v`; higher is fairer.
    pub ratio: f64,
    pub avg_all: f64,
    /// Last exit tick per gate, `0` for an unused gate.
    pub gate_times: [u32; 4],
    /// Agents still inside at `max_ticks`, counted with time `max_ticks`.
    pub censored: usize,
    pub ticks: u32,
}

/// Raw per-agent outcome of a run, before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvacOutcome {
    pub kinds: Vec<AgentKind>,
    pub gates: Vec<GateId>,
    /// Exit tick, or `max_ticks` for censored agents.
    pub times: Vec<u32>,
    pub censored: Vec<bool>,
    pub ticks: u32,
}

impl EvacOutcome {
    fn group_mean(&self, kind: Option<AgentKind>) -> Option<f64> {
        let mut sum = 0u64;
        let mut n = 0usize;
        for (k, t) in self.kinds.iter().zip(&self.times) {
            if kind.is_none_or(|want| *k == want) {
                sum += u64::from(*t);
                n += 1;
            }
        }
        (n > 0).then(|| sum as f64 / n as f64)
    }

    pub fn avg_vulnerable(&self) -> Option<f64> {
        self.group_mean(Some(AgentKind::Vulnerable))
    }

    pub fn avg_normal(&self) -> Option<f64> {
        self.group_mean(Some(AgentKind::Normal))
    }

    pub fn avg_all(&self) -> Option<f64> {
        self.group_mean(None)
    }

    fn exited(&self, kind: AgentKind) -> usize {
        self.kinds
            .iter()
            .zip(&self.censored)
            .filter(|(k, c)| **k == kind && !**c)
            .count()
    }

    pub fn metrics(&self) -> Result<EvacMetrics> {
        for (kind, label) in [(AgentKind::Vulnerable, "vulnerable"), (AgentKind::Normal, "normal")] {
            if self.exited(kind) == 0 {
                return Err(Error::FairnessUndefined(format!("no {label} agent evacuated")));
            }
        }
        let avg_v = self.avg_vulnerable().unwrap_or_default();
        let avg_n = self.avg_normal().unwrap_or_default();
        let mut gate_times = [0u32; 4];
        for ((g, t), c) in self.gates.iter().zip(&self.times).zip(&self.censored) {
            if !c {
                let slot = &mut gate_times[g.index()];
                *slot = (*slot).max(*t);
            }
        }
        Ok(EvacMetrics {
            avg_v,
            avg_n,
            ratio: fairness_index(avg_v, avg_n)?,
            avg_all: self.avg_all().unwrap_or_default(),
            gate_times,
            censored: self.censored.iter().filter(|c| **c).count(),
            ticks: self.ticks,
        })
    }
}

/// Mean normal evacuation time over mean vulnerable evacuation time.
pub fn fairness_index(avg_v: f64, avg_n: f64) -> Result<f64> {
    if !(avg_v.is_finite() && avg_v > 0.0) {
        return Err(Error::FairnessUndefined(format!(
            "mean vulnerable time must be positive, got {avg_v}"
        )));
    }
    Ok(avg_n / avg_v)
}

/// Receives the agent table after each tick.
pub type TraceFn<'a> = &'a mut dyn FnMut(&[EvacTraceRow]);

/// Runs one evacuation and returns per-agent outcomes. `trace`, if given,
/// receives the full agent table after every tick.
pub fn run_evacuation_outcome(
    scenario: Scenario,
    strategy: Strategy,
    params: &EvacParams,
    seed: u64,
    mut trace: Option<TraceFn<'_>>,
) -> Result<EvacOutcome> {
    let mut world = generate_scenario(scenario, params, RngStream::new(seed))?;
    world.assign_gates(strategy);
    while world.remaining() > 0 && world.tick() < params.max_ticks {
        world.step();
        if let Some(f) = trace.as_mut() {
            f(&world.trace_rows());
        }
    }
    let max_ticks = params.max_ticks;
    let agents = world.agents();
    Ok(EvacOutcome {
        kinds: agents.iter().map(|a| a.kind).collect(),
        gates: agents.iter().map(|a| a.assigned_gate).collect(),
        times: agents.iter().map(|a| a.evac_time.unwrap_or(max_ticks)).collect(),
        censored: agents.iter().map(|a| !a.evacuated()).collect(),
        ticks: world.tick(),
    })
}

/// Runs one evacuation to completion (or `params.max_ticks`) and
/// summarises it.
pub fn run_evacuation(scenario: Scenario, strategy: Strategy, params: &EvacParams, seed: u64) -> Result<EvacMetrics> {
    run_evacuation_outcome(scenario, strategy, params, seed, None)?.metrics()
}
