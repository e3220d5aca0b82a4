//! Checks shared by the property tests and the acceptance runner. Each
//! returns `Err` with a description of the first violation found.
#![allow(dead_code)]

use crowdsim::evac::{
    choose_move, generate_scenario, position_utility, AgentKind, EvacAgent, EvacParams, EvacWorld, Scenario, Strategy,
};
use crowdsim::stage::{
    run_stage_sim_traced, Destination, MapId, Patch, StageParams, StageTraceRow, StageWorld, Subareas, GRID_SIZE,
};
use crowdsim::{OccupancyIndex, Rect, RngStream, Vec2};

pub type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Randomised evac runs: nobody inside anyone's contact radius, everyone
/// inside the arena, and in-arena plus evacuated always equals the
/// population. Pairs are checked by brute force.
pub fn evac_invariants(seeds: u64, ticks: u32) -> Check {
    for seed in 0..seeds {
        let mut rng = RngStream::new(1000 + seed);
        let side = rng.uniform_real(25.0, 60.0).unwrap();
        let params = EvacParams {
            width: side,
            height: side,
            n_vulnerable: rng.uniform_int(5, 60).unwrap() as usize,
            n_normal: rng.uniform_int(20, 200).unwrap() as usize,
            ..EvacParams::default()
        };
        let scenario = Scenario::ALL[rng.index(4)];
        let strategy = Strategy::ALL[rng.index(3)];
        let mut world = generate_scenario(scenario, &params, RngStream::new(seed)).map_err(|e| e.to_string())?;
        world.assign_gates(strategy);
        let bounds = world.bounds();
        let contact = params.contact_radius;
        for _ in 0..ticks {
            world.step();
            let inside: Vec<&EvacAgent> = world.agents().iter().filter(|a| !a.evacuated()).collect();
            ensure(inside.len() + world.evacuated() == params.population(), || {
                format!("seed {seed} tick {}: agent count not conserved", world.tick())
            })?;
            ensure(inside.len() == world.remaining(), || {
                format!("seed {seed}: remaining() disagrees with agent table")
            })?;
            for (i, a) in inside.iter().enumerate() {
                ensure(bounds.contains_eps(a.position, 1e-9), || {
                    format!("seed {seed} tick {}: agent {} left the arena", world.tick(), a.id)
                })?;
                for b in &inside[i + 1..] {
                    let d = a.position.distance(b.position);
                    ensure(d > contact, || {
                        format!(
                            "seed {seed} tick {}: agents {} and {} at {d:.4}",
                            world.tick(),
                            a.id,
                            b.id
                        )
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// Randomised stage runs: one agent per patch, nobody on a stage or
/// facility patch, subarea occupancy matches the grid, agents are never
/// lost, and flags agree with their counters.
pub fn stage_invariants(seeds: u64, ticks: u32) -> Check {
    for seed in 0..seeds {
        let mut rng = RngStream::new(2000 + seed);
        let params = StageParams {
            map: MapId::ALL[rng.index(3)],
            pn: rng.uniform_int(20, 900).unwrap() as usize,
            brf: rng.uniform_int(5, 60).unwrap() as u32,
            brt: rng.uniform_int(1, 60).unwrap() as u32,
            pt: rng.uniform_int(1, 20).unwrap() as u32,
            st: rng.uniform_int(1, 40).unwrap() as u32,
            si: rng.uniform_int(1, 40).unwrap() as u32,
            run_length: ticks,
            ..StageParams::default()
        };
        let mut world = StageWorld::build(&params, seed).map_err(|e| e.to_string())?;
        for _ in 0..ticks {
            world.step();
            let tick = world.tick();
            let mut seen = vec![None; (GRID_SIZE * GRID_SIZE) as usize];
            let mut counts = vec![0u32; Subareas::COUNT];
            let mut off = 0;
            for a in world.agents() {
                if world.is_off_grid(a.id) {
                    off += 1;
                } else {
                    let p = Patch::new(a.x, a.y);
                    ensure(p.in_grid() && !world.layout().is_blocked(p), || {
                        format!("seed {seed} tick {tick}: agent {} on ({}, {})", a.id, a.x, a.y)
                    })?;
                    ensure(seen[p.index()].replace(a.id).is_none(), || {
                        format!("seed {seed} tick {tick}: two agents on ({}, {})", a.x, a.y)
                    })?;
                    ensure(world.occupant(p) == Some(a.id), || {
                        format!("seed {seed} tick {tick}: grid disagrees about agent {}", a.id)
                    })?;
                    counts[world.subareas().of(p)] += 1;
                }
                ensure(
                    a.panic_flag == (a.destination.is_facility() && a.block_counter_facility > params.pt),
                    || format!("seed {seed} tick {tick}: agent {} panic flag inconsistent", a.id),
                )?;
                ensure(
                    a.surge_flag == (a.destination.is_stage() && a.block_counter_stage > params.st),
                    || format!("seed {seed} tick {tick}: agent {} surge flag inconsistent", a.id),
                )?;
                ensure(
                    !a.panic_flag || matches!(a.destination, Destination::Bar | Destination::Restroom),
                    || format!("seed {seed} tick {tick}: panic without a facility destination"),
                )?;
            }
            let on_grid = (0..seen.len())
                .filter(|&i| world.occupant(Patch::from_index(i)).is_some())
                .count();
            ensure(on_grid + off == params.pn, || {
                format!(
                    "seed {seed} tick {tick}: {on_grid} on grid + {off} away != {}",
                    params.pn
                )
            })?;
            for (s, &c) in counts.iter().enumerate() {
                ensure(world.occupancy(s) == c, || {
                    format!(
                        "seed {seed} tick {tick}: subarea {s} occupancy {} != {c}",
                        world.occupancy(s)
                    )
                })?;
            }
        }
    }
    Ok(())
}

/// Audits a stage trace: every switch has a subarea whose timer exceeds
/// SI with at least `min_neighbors` crowded 4-neighbours, no qualifying tick
/// goes without a switch, the trigger is the first qualifier, and each
/// timer equals its run of crowded ticks since the last switch.
pub fn audit_stage_trace(rows: &[StageTraceRow], si: u32, min_neighbors: usize) -> Check {
    let mut expected = vec![0u32; Subareas::COUNT];
    for row in rows {
        let t = row.tick;
        for (s, sub) in row.subareas.iter().enumerate() {
            let want = if sub.crowded { expected[s] + 1 } else { 0 };
            ensure(sub.timer == want, || {
                format!("tick {t}: subarea {s} timer {} but crowded run is {want}", sub.timer)
            })?;
            expected[s] = want;
        }
        let qualifies = |s: usize| {
            row.subareas[s].timer > si
                && Subareas::neighbors(s).filter(|&n| row.subareas[n].crowded).count() >= min_neighbors
        };
        let first = (0..Subareas::COUNT).find(|&s| qualifies(s));
        ensure(row.switched == first, || {
            format!(
                "tick {t}: switch {:?} but first qualifying subarea is {first:?}",
                row.switched
            )
        })?;
        if row.switched.is_some() {
            expected.iter_mut().for_each(|e| *e = 0);
        }
    }
    Ok(())
}

/// Runs traced stage simulations and audits each trace.
pub fn stage_trace_audits(seeds: u64, run_length: u32) -> Check {
    let mut switches = 0;
    for seed in 0..seeds {
        for map in MapId::ALL {
            let params = StageParams {
                map,
                run_length,
                ..StageParams::default()
            };
            let mut rows = Vec::new();
            let mut sink = |r: StageTraceRow| rows.push(r);
            run_stage_sim_traced(&params, seed, Some(&mut sink)).map_err(|e| e.to_string())?;
            switches += rows.iter().filter(|r| r.switched.is_some()).count();
            audit_stage_trace(&rows, params.si, params.crowded_neighbors)
                .map_err(|e| format!("map {map} seed {seed}: {e}"))?;
        }
    }
    ensure(switches > 0, || "audited traces contain no switch at all".into())
}

/// `neighbors_within` against a brute-force scan on one random case.
pub fn neighbors_case(rng: &mut RngStream) -> Check {
    let side = rng.uniform_real(5.0, 80.0).unwrap();
    let bounds = Rect::new(0.0, 0.0, side, side);
    let cell = rng.uniform_real(0.3, 6.0).unwrap();
    let n = rng.uniform_int(0, 400).unwrap() as usize;
    let pts: Vec<Vec2> = (0..n)
        .map(|_| {
            Vec2::new(
                rng.uniform_real(0.0, side).unwrap(),
                rng.uniform_real(0.0, side).unwrap(),
            )
        })
        .collect();
    let index = OccupancyIndex::from_points(bounds, cell, pts.iter().copied().enumerate());
    for _ in 0..20 {
        let q = Vec2::new(
            rng.uniform_real(-2.0, side + 2.0).unwrap(),
            rng.uniform_real(-2.0, side + 2.0).unwrap(),
        );
        let r = rng.uniform_real(0.0, side / 3.0).unwrap();
        let mut want: Vec<(usize, f64)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.distance(q)))
            .filter(|&(_, d)| d <= r)
            .collect();
        want.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let got = index.neighbors_within(q, r);
        ensure(got == want, || {
            format!("query {q:?} r={r}: got {} ids, want {}", got.len(), want.len())
        })?;
    }
    Ok(())
}

pub fn neighbors_cases(cases: u64) -> Check {
    for case in 0..cases {
        let mut rng = RngStream::new(3000 + case);
        neighbors_case(&mut rng).map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

/// Steps of length `speed` a lone agent walking straight at corner
/// `anchor` needs before it is inside the square gate of side `g` at that
/// corner (ray/box entry distance over step length, not rounded).
pub fn straight_walk_steps(start: Vec2, anchor: Vec2, g: f64, speed: f64) -> f64 {
    let d = anchor - start;
    let len = d.length();
    // Distance along the ray until each coordinate is within g of the corner.
    let enter = |p: f64, a: f64, dc: f64| ((p - a).abs() - g).max(0.0) * len / dc.abs();
    enter(start.x, anchor.x, d.x).max(enter(start.y, anchor.y, d.y)) / speed
}

/// Up to three agents near separate corners of a 10 m arena with 1 m
/// gates; exit ticks must equal the straight-walk oracle exactly.
pub fn micro_oracle(cases: u64) -> Check {
    let params = EvacParams {
        width: 10.0,
        height: 10.0,
        gate_size: 1.0,
        n_vulnerable: 0,
        n_normal: 3,
        ..EvacParams::default()
    };
    let corners = [Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)];
    let mut checked = 0;
    for case in 0..cases {
        let mut rng = RngStream::new(4000 + case);
        let n = 1 + rng.index(3);
        let mut agents = Vec::new();
        let mut want = Vec::new();
        for &corner in corners.iter().take(n) {
            let (ox, oy) = (rng.uniform_real(1.5, 3.5).unwrap(), rng.uniform_real(1.5, 3.5).unwrap());
            let start = Vec2::new((corner.x - ox).abs(), (corner.y - oy).abs());
            let speed = rng.uniform_real(0.3, 1.0).unwrap();
            let steps = straight_walk_steps(start, corner, params.gate_size, speed);
            // Skip draws that land within rounding distance of a tick boundary.
            if (steps - steps.round()).abs() < 1e-6 {
                continue;
            }
            agents.push(EvacAgent::new(agents.len(), AgentKind::Normal, start, speed));
            want.push(steps.ceil() as u32);
        }
        if agents.is_empty() {
            continue;
        }
        let mut world = EvacWorld::from_agents(params.clone(), agents, case).map_err(|e| e.to_string())?;
        world.assign_gates(Strategy::Closest);
        while world.remaining() > 0 && world.tick() < 100 {
            world.step();
        }
        for (a, &w) in world.agents().iter().zip(&want) {
            ensure(a.evac_time == Some(w), || {
                format!(
                    "case {case}: agent {} exited at {:?}, oracle says {w}",
                    a.id, a.evac_time
                )
            })?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "no oracle case ran".into())
}

/// Every neighbour layout drawn from a small lattice (up to two
/// neighbours): the chosen move equals the first feasible maximiser of the
/// utility recomputed here by brute force over the candidate ring.
pub fn exhaustive_argmax() -> Check {
    let params = EvacParams {
        width: 20.0,
        height: 20.0,
        gate_size: 2.0,
        ..EvacParams::default()
    };
    let me = Vec2::new(10.0, 10.0);
    let speed = 0.9;
    let lattice: Vec<Vec2> = (-3..=3)
        .flat_map(|i| (-3..=3).map(move |j| Vec2::new(10.0 + 0.55 * i as f64, 10.0 + 0.55 * j as f64)))
        .filter(|p| p.distance(me) > params.contact_radius + 1e-9)
        .collect();
    let mut layouts: Vec<Vec<Vec2>> = vec![vec![]];
    for (i, &a) in lattice.iter().enumerate() {
        layouts.push(vec![a]);
        for &b in &lattice[i + 1..] {
            if a.distance(b) > params.contact_radius + 1e-9 {
                layouts.push(vec![a, b]);
            }
        }
    }
    let anchor = Vec2::new(0.0, 0.0);
    let k = params.candidate_count;
    for (n, layout) in layouts.iter().enumerate() {
        let mut agents = vec![EvacAgent::new(0, AgentKind::Normal, me, speed)];
        for (i, &p) in layout.iter().enumerate() {
            agents.push(EvacAgent::new(i + 1, AgentKind::Normal, p, 1.0));
        }
        let mut world = EvacWorld::from_agents(params.clone(), agents, 0).map_err(|e| e.to_string())?;
        world.assign_gates(Strategy::Closest);

        let bearing = (anchor.y - me.y).atan2(anchor.x - me.x);
        let mut ring = vec![me];
        ring.extend((0..k).map(|i| {
            let th = bearing + std::f64::consts::TAU * i as f64 / k as f64;
            Vec2::new(me.x + speed * th.cos(), me.y + speed * th.sin())
        }));
        let score = |c: Vec2| -> Option<f64> {
            let mut u = -c.distance(anchor);
            for &p in layout {
                let d = c.distance(p);
                if d <= params.contact_radius {
                    return None;
                }
                if d < params.personal_radius {
                    u -= params.repulsion_weight * (params.personal_radius - d);
                }
            }
            Some(u)
        };
        let mut best: Option<(Vec2, f64)> = None;
        for &c in &ring {
            if let Some(u) = score(c) {
                if best.is_none_or(|(_, bu)| u > bu + 1e-12) {
                    best = Some((c, u));
                }
            }
        }
        let got = choose_move(&world.agents()[0], &world);
        match (got, best) {
            (None, None) => {}
            (Some(g), Some((w, wu))) => {
                let gu = position_utility(&world.agents()[0], g, &world).unwrap();
                // Exact ties may fall either way under rounding; the utility must match.
                ensure(
                    (gu - wu).abs() < 1e-9 && ring.iter().any(|c| c.distance(g) < 1e-9),
                    || format!("layout {n}: chose {g:?} (u={gu}), oracle {w:?} (u={wu})"),
                )?;
            }
            (g, w) => return Err(format!("layout {n}: chose {g:?}, oracle {w:?}")),
        }
    }
    Ok(())
}

fn within_three_sigma(hits: u64, trials: u64, p: f64) -> bool {
    let mean = trials as f64 * p;
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - mean).abs() <= 3.0 * sigma
}

/// RGA gate choices pooled over several default populations: each gate's
/// count is within 3 sigma of a quarter.
pub fn rga_gate_frequencies(seeds: u64) -> Check {
    let params = EvacParams::default();
    let mut counts = [0u64; 4];
    for seed in 0..seeds {
        let mut world = generate_scenario(Scenario::S3, &params, RngStream::new(seed)).map_err(|e| e.to_string())?;
        world.assign_gates(Strategy::Random);
        for a in world.agents() {
            counts[a.assigned_gate.index()] += 1;
        }
    }
    let n: u64 = counts.iter().sum();
    ensure(counts.iter().all(|&c| within_three_sigma(c, n, 0.25)), || {
        format!("gate counts {counts:?} of {n}")
    })
}

/// Trip starts pooled over the first rounds of several runs: the share of
/// eligible agents that leave is within 3 sigma of `trip_fraction`. Dwell
/// is longer than the observed window so nobody comes back.
pub fn trip_initiation_rate(seeds: u64, rounds: u32) -> Check {
    let params = StageParams {
        brt: 100_000,
        ..StageParams::default()
    };
    let (mut trials, mut hits) = (0u64, 0u64);
    for seed in 0..seeds {
        let mut world = StageWorld::build(&params, seed).map_err(|e| e.to_string())?;
        for _ in 0..rounds * params.brf {
            let trip_tick = (world.tick() + 1) % params.brf == 0;
            let before = world.agents().iter().filter(|a| a.activity.on_trip()).count() as u64;
            world.step();
            let after = world.agents().iter().filter(|a| a.activity.on_trip()).count() as u64;
            if trip_tick {
                trials += params.pn as u64 - before;
                hits += after - before;
            } else {
                ensure(after == before, || format!("seed {seed}: trip started off-schedule"))?;
            }
        }
    }
    ensure(within_three_sigma(hits, trials, params.trip_fraction), || {
        format!("{hits} trips from {trials} eligible")
    })
}
