//! Candidate-step movement: each tick an agent looks at its current spot and
//! `K` points on a circle of radius `speed`, drops any that would put it in
//! contact with someone, and takes the one that best trades progress towards
//! its gate against intrusion into other agents' personal space.

use std::f64::consts::TAU;

use crate::geom::{Rect, Vec2};

use super::{EvacAgent, EvacParams, EvacWorld};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub pos: Vec2,
}

/// Writes the candidate list into `out`: `pos` first, then `k` points at
/// radius `speed` starting on the bearing towards `target` and proceeding
/// counter-clockwise. Points outside `bounds` are dropped.
pub(crate) fn candidates_into(pos: Vec2, speed: f64, target: Vec2, k: usize, bounds: &Rect, out: &mut Vec<Vec2>) {
    out.clear();
    out.push(pos);
    let bearing = (target - pos).angle();
    for i in 0..k {
        let theta = bearing + TAU * i as f64 / k as f64;
        let c = pos + Vec2::from_angle(theta) * speed;
        if bounds.contains_eps(c, 1e-9) {
            out.push(c);
        }
    }
}

/// Score of standing at `pos`, or `None` when `pos` is within contact
/// radius of a neighbour.
pub(crate) fn utility(pos: Vec2, target: Vec2, neighbors: &[Neighbor], params: &EvacParams) -> Option<f64> {
    let contact_sq = params.contact_radius * params.contact_radius;
    let rho = params.personal_radius;
    let mut penalty = 0.0;
    for n in neighbors {
        let d_sq = n.pos.distance_sq(pos);
        if d_sq <= contact_sq {
            return None;
        }
        if d_sq < rho * rho {
            penalty += params.repulsion_weight * (rho - d_sq.sqrt());
        }
    }
    Some(-pos.distance(target) - penalty)
}

/// Index into `candidates` of the best feasible candidate. Earlier entries
/// win ties.
pub(crate) fn best_candidate(
    candidates: &[Vec2],
    target: Vec2,
    neighbors: &[Neighbor],
    params: &EvacParams,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in candidates.iter().enumerate() {
        if let Some(u) = utility(c, target, neighbors, params) {
            if best.is_none_or(|(_, bu)| u > bu) {
                best = Some((i, u));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub fn candidate_positions(agent: &EvacAgent, world: &EvacWorld) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(world.params().candidate_count + 1);
    candidates_into(
        agent.position,
        agent.speed,
        world.gate(agent.assigned_gate).anchor,
        world.params().candidate_count,
        &world.bounds(),
        &mut out,
    );
    out
}

/// Utility of `pos` for `agent` against everyone else still in the arena.
pub fn position_utility(agent: &EvacAgent, pos: Vec2, world: &EvacWorld) -> Option<f64> {
    let neighbors = world.neighbors_of(
        agent.id,
        pos,
        world.params().personal_radius.max(world.params().contact_radius),
    );
    utility(pos, world.gate(agent.assigned_gate).anchor, &neighbors, world.params())
}

/// Where `agent` would move this tick, or `None` if every candidate
/// (including staying put) is infeasible.
pub fn choose_move(agent: &EvacAgent, world: &EvacWorld) -> Option<Vec2> {
    let params = world.params();
    let candidates = candidate_positions(agent, world);
    let reach = agent.speed + params.personal_radius.max(params.contact_radius);
    let neighbors = world.neighbors_of(agent.id, agent.position, reach);
    let target = world.gate(agent.assigned_gate).anchor;
    best_candidate(&candidates, target, &neighbors, params).map(|i| candidates[i])
}
