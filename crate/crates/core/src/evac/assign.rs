use crate::geom::Vec2;
use crate::rng::RngStream;

use super::{AgentKind, EvacAgent, Gate, GateId, Strategy};

/// Gate whose anchor is closest to `p`, skipping `exclude`. Ties go to the
/// lowest gate id.
pub fn nearest_gate(gates: &[Gate; 4], p: Vec2, exclude: Option<GateId>) -> GateId {
    let mut best: Option<(GateId, f64)> = None;
    for g in gates {
        if Some(g.id) == exclude {
            continue;
        }
        let d = g.anchor.distance_sq(p);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((g.id, d));
        }
    }
    best.map(|(id, _)| id).unwrap_or(GateId::G1)
}

/// Assigns a gate to every agent still in the arena. Agents are visited in
/// ascending id order; only [`Strategy::Random`] draws from `rng`.
pub fn assign_gates(
    agents: &mut [EvacAgent],
    gates: &[Gate; 4],
    strategy: Strategy,
    designated: GateId,
    exclusive: bool,
    rng: &mut RngStream,
) {
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by_key(|&i| agents[i].id);
    for i in order {
        let agent = &mut agents[i];
        if agent.evacuated() {
            continue;
        }
        agent.assigned_gate = match strategy {
            Strategy::Random => GateId::ALL[rng.index(4)],
            Strategy::Closest => nearest_gate(gates, agent.position, None),
            Strategy::VulnerableExclusive => match agent.kind {
                AgentKind::Vulnerable => designated,
                AgentKind::Normal => nearest_gate(gates, agent.position, exclusive.then_some(designated)),
            },
        };
    }
}
