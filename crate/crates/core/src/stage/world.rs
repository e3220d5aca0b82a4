use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::layout::{MapLayout, Patch, Subareas, GRID_SIZE};
use super::metrics::{StageTraceRow, SubareaTrace};
use super::{Activity, Destination, StageAgent, StageParams, StageSide, TripMode};

/// Neighbour order used for movement ties: N, NE, E, SE, S, SW, W, NW.
const DIRECTIONS: [(i32, i32); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

/// What happened during one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepReport {
    pub tick: u32,
    pub panic: u32,
    pub surge: u32,
    /// Subarea that triggered a stage switch this tick.
    pub switched: Option<usize>,
}

impl StepReport {
    /// Agents in panic or surge state.
    pub fn flagged(&self) -> u32 {
        self.panic + self.surge
    }
}

#[derive(Debug, Clone)]
pub struct StageWorld {
    params: StageParams,
    layout: MapLayout,
    subareas: Subareas,
    grid: Vec<Option<u32>>,
    blocked: Vec<bool>,
    agents: Vec<StageAgent>,
    open: StageSide,
    tick: u32,
    rng: RngStream,
    occupancy: Vec<u32>,
    flagged: Vec<u32>,
    crowded: Vec<bool>,
    crowded_since: Vec<u32>,
    switch_log: Vec<u32>,
    order: Vec<usize>,
    allow_swaps: bool,
}

impl StageWorld {
    /// A world with the map laid out and nobody on it.
    pub fn empty(params: &StageParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let layout = MapLayout::for_map(params.map);
        let subareas = Subareas::new(&layout);
        let cells = (GRID_SIZE * GRID_SIZE) as usize;
        let blocked = (0..cells).map(|i| layout.is_blocked(Patch::from_index(i))).collect();
        Ok(Self {
            params: params.clone(),
            layout,
            subareas,
            grid: vec![None; cells],
            blocked,
            agents: Vec::new(),
            open: params.initial_open,
            tick: 0,
            rng: RngStream::new(seed),
            occupancy: vec![0; Subareas::COUNT],
            flagged: vec![0; Subareas::COUNT],
            crowded: vec![false; Subareas::COUNT],
            crowded_since: vec![0; Subareas::COUNT],
            switch_log: Vec::new(),
            order: Vec::new(),
            allow_swaps: params.counterflow_swaps,
        })
    }

    /// Places `params.pn` attendees on distinct free patches.
    ///
    /// Draw order: one shuffle of the free patches (the first `pn` are
    /// used, in id order), one shuffle of ids (the first `pn / 2` get speed
    /// 2), then comfort distance and hesitation per agent in id order.
    pub fn build(params: &StageParams, seed: u64) -> Result<Self> {
        let mut world = Self::empty(params, seed)?;
        let mut free: Vec<usize> = (0..world.grid.len()).filter(|&i| !world.blocked[i]).collect();
        if params.pn > free.len() {
            return Err(Error::Placement {
                what: format!("map {}", params.map),
                reason: format!("{} agents but only {} free patches", params.pn, free.len()),
            });
        }
        world.rng.shuffle(&mut free);
        let mut ids: Vec<usize> = (0..params.pn).collect();
        world.rng.shuffle(&mut ids);
        let mut speeds = vec![1u8; params.pn];
        for &id in ids.iter().take(params.pn / 2) {
            speeds[id] = 2;
        }
        for (id, &cell) in free.iter().take(params.pn).enumerate() {
            let comfort = world.rng.uniform_int(1, 10)? as u8;
            let hesitation = world.rng.uniform_int(1, 20)? as u8;
            world.place_agent(Patch::from_index(cell), speeds[id], comfort, hesitation)?;
        }
        Ok(world)
    }

    /// Adds one attendee heading for the open stage.
    pub fn place_agent(&mut self, at: Patch, speed: u8, comfort_distance: u8, hesitation: u8) -> Result<usize> {
        if !at.in_grid() || self.blocked[at.index()] || self.grid[at.index()].is_some() {
            return Err(Error::Placement {
                what: "agent".into(),
                reason: format!("patch ({}, {}) is not free", at.x, at.y),
            });
        }
        let id = self.agents.len();
        self.agents.push(StageAgent {
            id,
            x: at.x,
            y: at.y,
            speed,
            comfort_distance,
            hesitation,
            activity: Activity::ToStage,
            destination: Destination::stage(self.open),
            block_counter_stage: 0,
            block_counter_facility: 0,
            surge_flag: false,
            panic_flag: false,
            dwell_remaining: 0,
            hesitation_remaining: 0,
        });
        self.grid[at.index()] = Some(id as u32);
        self.occupancy[self.subareas.of(at)] += 1;
        Ok(id)
    }

    pub fn params(&self) -> &StageParams {
        &self.params
    }

    pub fn layout(&self) -> &MapLayout {
        &self.layout
    }

    pub fn subareas(&self) -> &Subareas {
        &self.subareas
    }

    pub fn agents(&self) -> &[StageAgent] {
        &self.agents
    }

    pub fn agent_mut(&mut self, id: usize) -> &mut StageAgent {
        &mut self.agents[id]
    }

    pub fn open_stage(&self) -> StageSide {
        self.open
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn switch_log(&self) -> &[u32] {
        &self.switch_log
    }

    pub fn occupant(&self, p: Patch) -> Option<usize> {
        self.grid[p.index()].map(|id| id as usize)
    }

    pub fn occupancy(&self, subarea: usize) -> u32 {
        self.occupancy[subarea]
    }

    pub fn is_crowded(&self, subarea: usize) -> bool {
        self.crowded[subarea]
    }

    pub fn crowded_since(&self, subarea: usize) -> u32 {
        self.crowded_since[subarea]
    }

    fn facility_patch(&self, dest: Destination) -> Patch {
        match dest {
            Destination::Bar => self.layout.bar,
            _ => self.layout.restroom,
        }
    }

    fn distance_sq_to(&self, dest: Destination, p: Patch) -> i32 {
        match dest {
            Destination::LeftStage => self.layout.left_stage.distance_sq(p),
            Destination::RightStage => self.layout.right_stage.distance_sq(p),
            Destination::Bar | Destination::Restroom => self.facility_patch(dest).distance_sq(p),
        }
    }

    fn arrival_radius_sq(&self, agent: &StageAgent) -> f64 {
        if agent.destination.is_stage() {
            f64::from(agent.comfort_distance).powi(2)
        } else {
            self.params.facility_radius.powi(2)
        }
    }

    /// Dwell and hesitation countdowns, then (every `brf` ticks) new
    /// bar/restroom trips.
    pub fn plan_intents(&mut self) {
        let open = Destination::stage(self.open);
        let mut leaving = Vec::new();
        for a in &mut self.agents {
            match a.activity {
                Activity::Hesitating => {
                    a.hesitation_remaining = a.hesitation_remaining.saturating_sub(1);
                    if a.hesitation_remaining == 0 {
                        a.destination = open;
                        a.activity = Activity::ToStage;
                    }
                }
                Activity::AtFacility => {
                    a.dwell_remaining = a.dwell_remaining.saturating_sub(1);
                    if a.dwell_remaining == 0 {
                        leaving.push(a.id);
                    }
                }
                _ => {}
            }
        }
        for id in leaving {
            self.leave_facility(id);
        }
        if self.tick > 0 && self.tick.is_multiple_of(self.params.brf) {
            self.start_trips();
        }
    }

    fn start_trips(&mut self) {
        let mut eligible: Vec<usize> = self
            .agents
            .iter()
            .filter(|a| !a.activity.on_trip())
            .map(|a| a.id)
            .collect();
        let leaving: Vec<usize> = match self.params.trip_mode {
            TripMode::Independent => {
                let p = self.params.trip_fraction;
                eligible.into_iter().filter(|_| self.rng.chance(p)).collect()
            }
            TripMode::Quota => {
                let k = (self.params.trip_fraction * eligible.len() as f64).round() as usize;
                self.rng.shuffle(&mut eligible);
                eligible.truncate(k);
                eligible
            }
        };
        for id in leaving {
            let dest = if self.rng.index(2) == 0 {
                Destination::Bar
            } else {
                Destination::Restroom
            };
            let a = &mut self.agents[id];
            a.destination = dest;
            a.activity = Activity::ToFacility;
            a.block_counter_stage = 0;
            a.block_counter_facility = 0;
            a.surge_flag = false;
            a.panic_flag = false;
            a.hesitation_remaining = 0;
        }
    }

    fn arrive(&mut self, id: usize) {
        let brt = self.params.brt;
        let a = &mut self.agents[id];
        a.block_counter_stage = 0;
        a.block_counter_facility = 0;
        a.surge_flag = false;
        a.panic_flag = false;
        if a.destination.is_stage() {
            a.activity = Activity::AtStage;
        } else {
            // Inside the bar or restroom: off the grid until the dwell ends.
            a.activity = Activity::AtFacility;
            a.dwell_remaining = brt;
            let p = Patch::new(a.x, a.y);
            self.grid[p.index()] = None;
            self.occupancy[self.subareas.of(p)] -= 1;
        }
    }

    /// Puts an agent whose dwell has ended back on the free patch nearest
    /// its facility (ties by patch index) and sends it to the open stage.
    fn leave_facility(&mut self, id: usize) {
        let facility = self.facility_patch(self.agents[id].destination);
        let exit = self
            .nearest_free(facility)
            .expect("grid has a free patch while an agent is off it");
        self.grid[exit.index()] = Some(id as u32);
        self.occupancy[self.subareas.of(exit)] += 1;
        let open = Destination::stage(self.open);
        let a = &mut self.agents[id];
        a.x = exit.x;
        a.y = exit.y;
        a.destination = open;
        a.activity = Activity::ToStage;
        a.block_counter_facility = 0;
        a.panic_flag = false;
    }

    /// Free walkable patch closest to `center`, ties by patch index. Scans
    /// square rings outward and stops once no farther ring can do better.
    fn nearest_free(&self, center: Patch) -> Option<Patch> {
        let mut best: Option<(i32, usize)> = None;
        for r in 0..GRID_SIZE {
            if best.is_some_and(|(d, _)| r * r > d) {
                break;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let p = Patch::new(center.x + dx, center.y + dy);
                    if !p.in_grid() || self.blocked[p.index()] || self.grid[p.index()].is_some() {
                        continue;
                    }
                    let key = (dx * dx + dy * dy, p.index());
                    if best.is_none_or(|b| key < b) {
                        best = Some(key);
                    }
                }
            }
        }
        best.map(|(_, i)| Patch::from_index(i))
    }

    /// True while the agent is inside the bar or restroom and off the grid.
    pub fn is_off_grid(&self, id: usize) -> bool {
        self.agents[id].activity == Activity::AtFacility
    }

    /// Moves every walking agent once, in a freshly shuffled order.
    pub fn move_agents(&mut self) {
        let mut order = std::mem::take(&mut self.order);
        order.clear();
        order.extend(0..self.agents.len());
        self.rng.shuffle(&mut order);
        for &id in &order {
            self.move_agent(id);
        }
        self.order = order;
    }

    fn move_agent(&mut self, id: usize) {
        let agent = &self.agents[id];
        if matches!(agent.activity, Activity::Hesitating | Activity::AtFacility) {
            return;
        }
        let dest = agent.destination;
        let radius_sq = self.arrival_radius_sq(agent);
        let speed = agent.speed;
        let mut pos = Patch::new(agent.x, agent.y);
        let mut dist = self.distance_sq_to(dest, pos);
        if f64::from(dist) <= radius_sq {
            if !matches!(agent.activity, Activity::AtStage) {
                self.arrive(id);
            }
            return;
        }
        self.agents[id].activity = if dest.is_stage() {
            Activity::ToStage
        } else {
            Activity::ToFacility
        };

        let mut moves = 0;
        for _ in 0..speed {
            let mut best: Option<(Patch, i32)> = None;
            for (dx, dy) in DIRECTIONS {
                let np = Patch::new(pos.x + dx, pos.y + dy);
                if !np.in_grid() || self.blocked[np.index()] {
                    continue;
                }
                if let Some(other) = self.grid[np.index()] {
                    if !(self.allow_swaps && self.swap_helps(other as usize, pos, np)) {
                        continue;
                    }
                }
                let d = self.distance_sq_to(dest, np);
                if d < best.map_or(dist, |b| b.1) {
                    best = Some((np, d));
                }
            }
            let Some((np, d)) = best else { break };
            match self.grid[np.index()] {
                Some(other) => self.swap(id, other as usize, pos, np),
                None => self.relocate(id, pos, np),
            }
            pos = np;
            dist = d;
            moves += 1;
            if f64::from(dist) <= radius_sq {
                break;
            }
        }

        let a = &mut self.agents[id];
        if moves == 0 {
            if dest.is_stage() {
                a.block_counter_stage += 1;
            } else {
                a.block_counter_facility += 1;
            }
        } else if dest.is_stage() {
            a.block_counter_stage = 0;
            a.surge_flag = false;
        } else {
            a.block_counter_facility = 0;
            a.panic_flag = false;
        }
        if f64::from(dist) <= radius_sq {
            self.arrive(id);
        }
    }

    /// Whether the walking agent `other` at `there` would also get strictly
    /// closer to its own destination by taking `here`.
    fn swap_helps(&self, other: usize, here: Patch, there: Patch) -> bool {
        let o = &self.agents[other];
        matches!(o.activity, Activity::ToStage | Activity::ToFacility)
            && self.distance_sq_to(o.destination, here) < self.distance_sq_to(o.destination, there)
    }

    fn swap(&mut self, id: usize, other: usize, here: Patch, there: Patch) {
        self.grid[here.index()] = Some(other as u32);
        self.grid[there.index()] = Some(id as u32);
        for (agent, p) in [(id, there), (other, here)] {
            let a = &mut self.agents[agent];
            a.x = p.x;
            a.y = p.y;
        }
    }

    fn relocate(&mut self, id: usize, from: Patch, to: Patch) {
        self.grid[from.index()] = None;
        self.grid[to.index()] = Some(id as u32);
        let (sa, sb) = (self.subareas.of(from), self.subareas.of(to));
        if sa != sb {
            self.occupancy[sa] -= 1;
            self.occupancy[sb] += 1;
        }
        let a = &mut self.agents[id];
        a.x = to.x;
        a.y = to.y;
    }

    /// Recomputes panic/surge flags from the block counters, then the
    /// crowded state and crowded-since timer of every subarea. Returns the
    /// (panic, surge) counts.
    pub fn detect_states(&mut self) -> (u32, u32) {
        let (pt, st) = (self.params.pt, self.params.st);
        self.flagged.iter_mut().for_each(|f| *f = 0);
        let (mut panic, mut surge) = (0, 0);
        for a in &mut self.agents {
            a.panic_flag = a.destination.is_facility() && a.block_counter_facility > pt;
            a.surge_flag = a.destination.is_stage() && a.block_counter_stage > st;
            panic += u32::from(a.panic_flag);
            surge += u32::from(a.surge_flag);
            if a.flagged() && a.activity != Activity::AtFacility {
                self.flagged[self.subareas.of(Patch::new(a.x, a.y))] += 1;
            }
        }
        for s in 0..Subareas::COUNT {
            let walkable = self.subareas.walkable(s);
            let dense =
                walkable > 0 && f64::from(self.occupancy[s]) / f64::from(walkable) > self.params.crowded_occupancy;
            self.crowded[s] = dense && self.flagged[s] > 0;
            self.crowded_since[s] = if self.crowded[s] { self.crowded_since[s] + 1 } else { 0 };
        }
        (panic, surge)
    }

    /// First subarea (in index order) whose crowded-since timer exceeds SI
    /// while enough of its 4-neighbours are crowded.
    pub fn switch_candidate(&self) -> Option<usize> {
        (0..Subareas::COUNT).find(|&s| {
            self.crowded_since[s] > self.params.si
                && Subareas::neighbors(s).filter(|&n| self.crowded[n]).count() >= self.params.crowded_neighbors
        })
    }

    /// Switches the performing stage if [`switch_candidate`](Self::switch_candidate)
    /// finds a trigger. At most one switch per call.
    pub fn switch_controller(&mut self) -> Option<usize> {
        let trigger = self.switch_candidate()?;
        let old = Destination::stage(self.open);
        self.open = self.open.other();
        self.switch_log.push(self.tick);
        self.crowded_since.iter_mut().for_each(|t| *t = 0);
        for a in &mut self.agents {
            if a.destination == old
                && matches!(a.activity, Activity::ToStage | Activity::AtStage | Activity::Hesitating)
            {
                a.activity = Activity::Hesitating;
                a.hesitation_remaining = u32::from(a.hesitation);
                a.block_counter_stage = 0;
                a.surge_flag = false;
            }
        }
        Some(trigger)
    }

    /// One full tick: intents, movement, state detection, controller.
    pub fn step(&mut self) -> StepReport {
        self.step_traced(false).0
    }

    pub fn step_traced(&mut self, trace: bool) -> (StepReport, Option<StageTraceRow>) {
        self.tick += 1;
        self.plan_intents();
        self.move_agents();
        let (panic, surge) = self.detect_states();
        let mut row = trace.then(|| StageTraceRow {
            tick: self.tick,
            open_stage: self.open,
            subareas: (0..Subareas::COUNT)
                .map(|s| SubareaTrace {
                    occupancy: match self.subareas.walkable(s) {
                        0 => 0.0,
                        w => f64::from(self.occupancy[s]) / f64::from(w),
                    },
                    crowded: self.crowded[s],
                    timer: self.crowded_since[s],
                })
                .collect(),
            panic,
            surge,
            switched: None,
        });
        let switched = self.switch_controller();
        if let Some(r) = row.as_mut() {
            r.switched = switched;
        }
        (
            StepReport {
                tick: self.tick,
                panic,
                surge,
                switched,
            },
            row,
        )
    }
}
