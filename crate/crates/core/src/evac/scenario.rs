use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use crate::rng::RngStream;
use crate::spatial::OccupancyIndex;

use super::{AgentKind, EvacAgent, EvacParams, EvacWorld, Gate};

const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Initial crowd layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Gathered in a central square covering a quarter of the arena.
    S1,
    /// Gathered in an off-centre square of the same size towards the
    /// top-left corner.
    S2,
    /// Spread evenly over the whole arena.
    S3,
    /// Spread unevenly: 75/10/10/5 % over the top-left, top-right,
    /// bottom-left and bottom-right quadrants.
    S4,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4];

    /// Placement regions with their population shares.
    pub fn regions(self, bounds: Rect) -> Vec<(Rect, f64)> {
        let (w, h) = (bounds.width(), bounds.height());
        let (x0, y0) = (bounds.min.x, bounds.min.y);
        let square = |cx: f64, cy: f64| {
            Rect::new(
                x0 + (cx - 0.25) * w,
                y0 + (cy - 0.25) * h,
                x0 + (cx + 0.25) * w,
                y0 + (cy + 0.25) * h,
            )
        };
        match self {
            Scenario::S1 => vec![(square(0.5, 0.5), 1.0)],
            Scenario::S2 => vec![(square(S2_CENTER, S2_CENTER), 1.0)],
            Scenario::S3 => vec![(bounds, 1.0)],
            Scenario::S4 => {
                let c = bounds.center();
                vec![
                    (Rect::new(x0, y0, c.x, c.y), 0.75),
                    (Rect::new(c.x, y0, bounds.max.x, c.y), 0.10),
                    (Rect::new(x0, c.y, c.x, bounds.max.y), 0.10),
                    (Rect::new(c.x, c.y, bounds.max.x, bounds.max.y), 0.05),
                ]
            }
        }
    }
}

/// Fractional centre (both axes) of the S2 gathering square.
pub const S2_CENTER: f64 = 0.3;

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            "S3" => Ok(Scenario::S3),
            "S4" => Ok(Scenario::S4),
            other => Err(Error::param("scenario", format!("unknown scenario `{other}`"))),
        }
    }
}

/// Splits `total` into integer parts proportional to `shares` that sum to
/// `total` exactly. Leftover units go to the largest fractional remainders,
/// earlier entries first on equal remainders.
pub fn largest_remainder(total: usize, shares: &[f64]) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    if shares.is_empty() || sum <= 0.0 {
        return vec![0; shares.len()];
    }
    let exact: Vec<f64> = shares.iter().map(|s| total as f64 * s / sum).collect();
    let mut parts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        parts[i] += 1;
    }
    parts
}

/// Builds the initial world for `scenario`.
///
/// Draw order on `rng`: positions in id order, then one shuffle of the ids
/// (the first `n_vulnerable` become vulnerable), then speeds in id order.
pub fn generate_scenario(scenario: Scenario, params: &EvacParams, mut rng: RngStream) -> Result<EvacWorld> {
    params.validate()?;
    let bounds = params.bounds();
    let gates = Gate::corners(bounds, params.gate_size);
    let n = params.population();
    let regions = scenario.regions(bounds);
    let shares: Vec<f64> = regions.iter().map(|r| r.1).collect();
    let quotas = largest_remainder(n, &shares);

    let cell = params.personal_radius.max(params.contact_radius);
    let mut index = OccupancyIndex::new(bounds, cell);
    let mut positions = Vec::with_capacity(n);
    for ((region, _), quota) in regions.iter().zip(&quotas) {
        for _ in 0..*quota {
            let id = positions.len();
            let p = sample_free(region, &gates, &index, params.contact_radius, &mut rng).ok_or_else(|| {
                Error::Placement {
                    what: format!("scenario {scenario}"),
                    reason: format!("no room for agent {id} of {n} after {PLACEMENT_ATTEMPTS} attempts"),
                }
            })?;
            index.insert(id, p);
            positions.push(p);
        }
    }

    let mut ids: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut ids);
    let mut kinds = vec![AgentKind::Normal; n];
    for &id in ids.iter().take(params.n_vulnerable) {
        kinds[id] = AgentKind::Vulnerable;
    }

    let mut agents = Vec::with_capacity(n);
    for (id, (pos, kind)) in positions.into_iter().zip(kinds).enumerate() {
        let (lo, hi) = match kind {
            AgentKind::Normal => params.normal_speed,
            AgentKind::Vulnerable => params.vulnerable_speed,
        };
        let speed = rng.uniform_real(lo, hi)?;
        agents.push(EvacAgent::new(id, kind, pos, speed));
    }
    Ok(EvacWorld::with_rng(params.clone(), agents, rng))
}

fn sample_free(
    region: &Rect,
    gates: &[Gate; 4],
    index: &OccupancyIndex,
    contact: f64,
    rng: &mut RngStream,
) -> Option<Vec2> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let x = rng.uniform_real(region.min.x, region.max.x).ok()?;
        let y = rng.uniform_real(region.min.y, region.max.y).ok()?;
        let p = Vec2::new(x, y);
        if gates.iter().any(|g| g.region.contains_eps(p, contact)) {
            continue;
        }
        let mut clear = true;
        index.for_each_within(p, contact, |_, _| clear = false);
        if clear {
            return Some(p);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s4_quotas_for_default_population() {
        // 1363 * (0.75, 0.10, 0.10, 0.05) = 1022.25, 136.3, 136.3, 68.15
        // floors sum to 1362; the one spare unit goes to the largest
        // remainder (0.3, first of the tied pair).
        let q = largest_remainder(1363, &[0.75, 0.10, 0.10, 0.05]);
        assert_eq!(q.iter().sum::<usize>(), 1363);
        assert_eq!(q, vec![1022, 137, 136, 68]);
    }

    #[test]
    fn largest_remainder_exact_split() {
        assert_eq!(largest_remainder(100, &[0.75, 0.10, 0.10, 0.05]), vec![75, 10, 10, 5]);
        assert_eq!(largest_remainder(0, &[1.0, 1.0]), vec![0, 0]);
        assert_eq!(largest_remainder(3, &[1.0, 1.0]), vec![2, 1]);
    }

    #[test]
    fn s1_region_is_a_quarter_of_the_arena() {
        let b = Rect::new(0.0, 0.0, 100.0, 100.0);
        let r = Scenario::S1.regions(b);
        assert!((r[0].0.area() - 2500.0).abs() < 1e-9);
        assert!(r[0].0.center().distance(b.center()) < 1e-12);
        assert!((Scenario::S2.regions(b)[0].0.area() - 2500.0).abs() < 1e-9);
    }

    #[test]
    fn small_even_scenario_respects_bounds_and_contact() {
        let params = EvacParams {
            n_vulnerable: 1,
            n_normal: 3,
            ..EvacParams::default()
        };
        let w = generate_scenario(Scenario::S3, &params, RngStream::new(5)).unwrap();
        assert_eq!(w.agents().len(), 4);
        for a in w.agents() {
            assert!(w.bounds().contains(a.position));
        }
        assert!(w.min_pair_distance().is_none_or(|d| d > params.contact_radius));
    }

    #[test]
    fn population_split_and_speed_bands() {
        let params = EvacParams::default();
        let w = generate_scenario(Scenario::S1, &params, RngStream::new(8)).unwrap();
        let v: Vec<_> = w.agents().iter().filter(|a| a.kind == AgentKind::Vulnerable).collect();
        assert_eq!(v.len(), 340);
        assert_eq!(w.agents().len(), 1363);
        for a in w.agents() {
            let (lo, hi) = match a.kind {
                AgentKind::Normal => (1.0, 1.3),
                AgentKind::Vulnerable => (0.5, 0.65),
            };
            assert!(a.speed >= lo && a.speed < hi);
        }
    }

    #[test]
    fn same_seed_same_layout() {
        let params = EvacParams::default();
        for s in Scenario::ALL {
            let a = generate_scenario(s, &params, RngStream::new(21)).unwrap();
            let b = generate_scenario(s, &params, RngStream::new(21)).unwrap();
            assert_eq!(a.agents(), b.agents());
        }
    }

    #[test]
    fn overfull_arena_is_a_placement_error() {
        let params = EvacParams {
            width: 12.0,
            height: 12.0,
            gate_size: 1.0,
            n_vulnerable: 500,
            n_normal: 500,
            ..EvacParams::default()
        };
        let err = generate_scenario(Scenario::S3, &params, RngStream::new(1)).unwrap_err();
        assert!(matches!(err, Error::Placement { ref what, .. } if what.contains("S3")));
    }
}
