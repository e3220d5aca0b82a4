use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use crate::rng::RngStream;
use crate::spatial::OccupancyIndex;

use super::assign::assign_gates;
use super::movement::{best_candidate, candidates_into, Neighbor};
use super::{EvacAgent, EvacParams, Gate, GateId, Strategy};

const GATE_EPS: f64 = 1e-9;

/// One row of an evacuation trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvacTraceRow {
    pub tick: u32,
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub evacuated: bool,
}

#[derive(Debug, Clone)]
pub struct EvacWorld {
    params: EvacParams,
    bounds: Rect,
    gates: [Gate; 4],
    agents: Vec<EvacAgent>,
    tick: u32,
    rng: RngStream,
    index: OccupancyIndex,
    remaining: usize,
    candidates: Vec<Vec2>,
    neighbors: Vec<Neighbor>,
    order: Vec<usize>,
}

impl EvacWorld {
    /// Builds a world from explicit agents. Ids must be `0..n` in order,
    /// every agent inside the arena and no pair within contact radius.
    pub fn from_agents(params: EvacParams, agents: Vec<EvacAgent>, seed: u64) -> Result<Self> {
        params.validate()?;
        let bounds = params.bounds();
        for (i, a) in agents.iter().enumerate() {
            if a.id != i {
                return Err(Error::param("agents", format!("agent at index {i} has id {}", a.id)));
            }
            if !a.position.is_finite() || !bounds.contains(a.position) {
                return Err(Error::param("agents", format!("agent {i} outside arena")));
            }
            if !(a.speed.is_finite() && a.speed > 0.0) {
                return Err(Error::param("agents", format!("agent {i} has non-positive speed")));
            }
        }
        let world = Self::from_agents_unchecked(params, agents, seed);
        let r = world.params.contact_radius;
        for a in world.agents.iter().filter(|a| !a.evacuated()) {
            if let Some(n) = world.neighbors_of(a.id, a.position, r).first() {
                return Err(Error::Placement {
                    what: "agents".into(),
                    reason: format!("agents {} and {} are in contact", a.id, n.id),
                });
            }
        }
        Ok(world)
    }

    /// As [`from_agents`](Self::from_agents) without the consistency checks.
    pub fn from_agents_unchecked(params: EvacParams, agents: Vec<EvacAgent>, seed: u64) -> Self {
        let bounds = params.bounds();
        let gates = Gate::corners(bounds, params.gate_size);
        let cell = params.personal_radius.max(params.contact_radius);
        let index = OccupancyIndex::from_points(
            bounds,
            cell,
            agents.iter().filter(|a| !a.evacuated()).map(|a| (a.id, a.position)),
        );
        let remaining = index.len();
        Self {
            params,
            bounds,
            gates,
            agents,
            tick: 0,
            rng: RngStream::new(seed),
            index,
            remaining,
            candidates: Vec::new(),
            neighbors: Vec::new(),
            order: Vec::new(),
        }
    }

    pub(crate) fn with_rng(params: EvacParams, agents: Vec<EvacAgent>, rng: RngStream) -> Self {
        let mut w = Self::from_agents_unchecked(params, agents, 0);
        w.rng = rng;
        w
    }

    pub fn params(&self) -> &EvacParams {
        &self.params
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn gates(&self) -> &[Gate; 4] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn agents(&self) -> &[EvacAgent] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [EvacAgent] {
        &mut self.agents
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn evacuated(&self) -> usize {
        self.agents.len() - self.remaining
    }

    pub fn rng_mut(&mut self) -> &mut RngStream {
        &mut self.rng
    }

    pub fn assign_gates(&mut self, strategy: Strategy) {
        let designated = self.params.designated_gate;
        let exclusive = self.params.exclusive_gate;
        assign_gates(
            &mut self.agents,
            &self.gates,
            strategy,
            designated,
            exclusive,
            &mut self.rng,
        );
    }

    /// Agents other than `id` still in the arena within `r` of `pos`, sorted
    /// by `(distance, id)`.
    pub fn neighbors_of(&self, id: usize, pos: Vec2, r: f64) -> Vec<Neighbor> {
        self.index
            .neighbors_within(pos, r)
            .into_iter()
            .filter(|&(other, _)| other != id)
            .map(|(other, _)| Neighbor {
                id: other,
                pos: self.agents[other].position,
            })
            .collect()
    }

    /// Smallest pairwise distance among agents still in the arena.
    pub fn min_pair_distance(&self) -> Option<f64> {
        let reach = self.params.personal_radius.max(self.params.contact_radius) * 4.0;
        let mut best: Option<f64> = None;
        for a in self.agents.iter().filter(|a| !a.evacuated()) {
            self.index.for_each_within(a.position, reach, |other, p| {
                if other != a.id {
                    let d = p.distance(a.position);
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
            });
        }
        best
    }

    /// Advances one tick. Agents still in the arena act once each in a
    /// freshly shuffled order; an agent standing in its assigned gate region
    /// after its move leaves with `evac_time` set to the new tick.
    pub fn step(&mut self) {
        self.tick += 1;
        let tick = self.tick;
        let mut order = std::mem::take(&mut self.order);
        order.clear();
        order.extend(self.agents.iter().filter(|a| !a.evacuated()).map(|a| a.id));
        self.rng.shuffle(&mut order);

        let mut candidates = std::mem::take(&mut self.candidates);
        let mut neighbors = std::mem::take(&mut self.neighbors);
        let reach_extra = self.params.personal_radius.max(self.params.contact_radius);

        for &id in &order {
            let (pos, speed, gate) = {
                let a = &self.agents[id];
                (a.position, a.speed, self.gates[a.assigned_gate.index()])
            };
            let mut new_pos = pos;
            if !gate.region.contains_eps(pos, GATE_EPS) {
                candidates_into(
                    pos,
                    speed,
                    gate.anchor,
                    self.params.candidate_count,
                    &self.bounds,
                    &mut candidates,
                );
                neighbors.clear();
                self.index.for_each_within(pos, speed + reach_extra, |other, p| {
                    if other != id {
                        neighbors.push(Neighbor { id: other, pos: p });
                    }
                });
                if let Some(best) = best_candidate(&candidates, gate.anchor, &neighbors, &self.params) {
                    new_pos = candidates[best];
                }
            }
            let agent = &mut self.agents[id];
            agent.position = new_pos;
            if gate.region.contains_eps(new_pos, GATE_EPS) {
                agent.evac_time = Some(tick);
                self.index.remove(id);
                self.remaining -= 1;
            } else {
                self.index.update(id, new_pos);
            }
        }

        self.order = order;
        self.candidates = candidates;
        self.neighbors = neighbors;
    }

    pub fn trace_rows(&self) -> Vec<EvacTraceRow> {
        self.agents
            .iter()
            .map(|a| EvacTraceRow {
                tick: self.tick,
                id: a.id,
                x: a.position.x,
                y: a.position.y,
                evacuated: a.evacuated(),
            })
            .collect()
    }
}
