//! World setup, the synchronous tick loop and event logging.

pub mod config;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{
    search_update, self_direction, transition_state, BehaviorState, Neighbor, StateTag,
    ZoneRadii,
};
use crate::geometry::{unit_from_angle, wrap_degrees, TorusSpec, Vec2};
use crate::metrics::components::ComponentCounter;
use crate::metrics::coverage::CoverageGrid;
use crate::rng::RngStream;
use crate::spatial::CellGrid;

pub use config::{ConfigError, Recording, SimConfig};

/// Stream id of the world-level generator; agent `i` uses `i + 1`.
pub const WORLD_STREAM: u64 = 0;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub position: Vec2,
    /// Final heading in degrees, `[0, 360)`.
    pub heading: f64,
    /// Unit vector of `heading`.
    pub direction: Vec2,
    pub behavior: BehaviorState,
    /// Tick at which a target first came within `r_t`.
    pub detected_tick: Option<u64>,
    /// Set once the agent sits on its target (equal to `detected_tick`).
    pub arrival_tick: Option<u64>,
}

impl AgentState {
    /// A searching agent at `position` heading `heading` degrees.
    pub fn searching(id: usize, position: Vec2, heading: f64) -> Self {
        Self {
            id,
            position,
            heading: wrap_degrees(heading),
            direction: unit_from_angle(heading),
            behavior: BehaviorState::Search,
            detected_tick: None,
            arrival_tick: None,
        }
    }
}

/// Per-state agent counts at one tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub search: u32,
    pub lock: u32,
    pub find: u32,
    pub arrived: u32,
}

impl Census {
    pub fn of(agents: &[AgentState]) -> Self {
        let mut c = Census::default();
        for a in agents {
            match a.behavior.tag() {
                StateTag::Search => c.search += 1,
                StateTag::Lock => c.lock += 1,
                StateTag::Find => c.find += 1,
                StateTag::Arrived => c.arrived += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u32 {
        self.search + self.lock + self.find + self.arrived
    }
}

/// One agent at one tick.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub tick: u64,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub state: StateTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageLog {
    pub cells_per_side: usize,
    pub total_cells: u64,
    /// `m_t` for `t = 0..=ticks_run`.
    pub history: Vec<u32>,
}

/// Everything a run produced; all metrics are computed from this alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub config: SimConfig,
    pub ticks_run: u64,
    pub targets: Vec<Vec2>,
    /// `s_i` in ticks, `None` for censored agents.
    pub arrival_ticks: Vec<Option<u64>>,
    /// Agent ids in the order their arrival was recorded.
    pub arrival_order: Vec<usize>,
    pub arrival_targets: Vec<Option<usize>>,
    /// Component count for `t = 0..=ticks_run` (empty when not recorded).
    pub components: Vec<u32>,
    pub census: Vec<Census>,
    /// Sum over ticks of the number of agents in Lock.
    pub lock_agent_ticks: u64,
    pub coverage: Option<CoverageLog>,
    pub trajectory: Option<Vec<FrameRecord>>,
}

impl EventLog {
    /// Agents that never reached a target.
    pub fn censored_agents(&self) -> Vec<usize> {
        self.arrival_ticks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_censored(&self) -> bool {
        self.arrival_ticks.iter().any(Option::is_none)
    }

    /// Earliest arrival, in ticks.
    pub fn first_arrival(&self) -> Option<u64> {
        self.arrival_ticks.iter().flatten().min().copied()
    }
}

/// Agents in a disc of radius `r_s/2` around the center, each with its
/// initial heading drawn from its own stream; targets uniform over the world.
pub fn init_world(
    config: &SimConfig,
    world_rng: &mut RngStream,
    agent_rngs: &mut [RngStream],
) -> Result<(Vec<AgentState>, Vec<Vec2>), EngineError> {
    config.validate()?;
    assert_eq!(agent_rngs.len(), config.agents, "one stream per agent");
    let world = config.world();
    let center = world.center();
    let radius = config.r_s / 2.0;
    let agents = agent_rngs
        .iter_mut()
        .enumerate()
        .map(|(id, rng)| {
            let r = radius * world_rng.uniform().sqrt();
            let phi = world_rng.uniform_range(0.0, 360.0);
            let position = world.wrap(center + unit_from_angle(phi) * r);
            let heading = self_direction(0.0, config.sigma, true, rng);
            AgentState {
                id,
                position,
                heading,
                direction: unit_from_angle(heading),
                behavior: BehaviorState::Search,
                detected_tick: None,
                arrival_tick: None,
            }
        })
        .collect();
    let targets = if config.targets_enabled {
        let l = world.side_length();
        (0..config.targets)
            .map(|_| Vec2::new(world_rng.uniform_range(0.0, l), world_rng.uniform_range(0.0, l)))
            .collect()
    } else {
        Vec::new()
    };
    Ok((agents, targets))
}

/// Static target lookup.
#[derive(Clone, Debug)]
struct TargetIndex {
    positions: Vec<Vec2>,
    grid: Option<CellGrid>,
    fed: Vec<bool>,
    any_fed: bool,
}

impl TargetIndex {
    fn new(positions: Vec<Vec2>, world: TorusSpec, cell: f64) -> Self {
        let grid = (positions.len() > 1)
            .then(|| CellGrid::rebuild(&positions, world, cell).expect("validated radii"));
        let fed = vec![false; positions.len()];
        Self {
            positions,
            grid,
            fed,
            any_fed: false,
        }
    }

    /// Nearest target within `radius`, restricted to fed targets if asked.
    fn nearest(
        &self,
        world: &TorusSpec,
        p: Vec2,
        radius: f64,
        fed_only: bool,
    ) -> Option<(usize, f64)> {
        match &self.grid {
            None => {
                let t = *self.positions.first()?;
                if fed_only && !self.fed[0] {
                    return None;
                }
                let d = world.distance(p, t);
                (d <= radius).then_some((0, d))
            }
            Some(grid) => {
                let mut best: Option<(usize, f64)> = None;
                grid.visit_within(p, radius, None, |id, _, d| {
                    if fed_only && !self.fed[id] {
                        return;
                    }
                    match best {
                        Some((bid, bd)) if bd < d || (bd == d && bid < id) => {}
                        _ => best = Some((id, d)),
                    }
                })
                .expect("radius within cell size");
                best
            }
        }
    }
}

/// A running simulation.
pub struct Simulation {
    config: SimConfig,
    world: TorusSpec,
    zones: ZoneRadii,
    step: f64,
    budget: u64,
    tick: u64,
    agents: Vec<AgentState>,
    next: Vec<AgentState>,
    rngs: Vec<RngStream>,
    targets: TargetIndex,
    grid: CellGrid,
    grid_fresh: bool,
    positions: Vec<Vec2>,
    neighbors: Vec<Neighbor>,
    counter: ComponentCounter,
    /// Component graph vertices once agents have arrived.
    comp_grid: CellGrid,
    comp_positions: Vec<Vec2>,
    coverage: Option<CoverageGrid>,
    newly_detected: Vec<usize>,
    // log
    arrival_ticks: Vec<Option<u64>>,
    arrival_order: Vec<usize>,
    arrival_targets: Vec<Option<usize>>,
    components: Vec<u32>,
    census: Vec<Census>,
    lock_agent_ticks: u64,
    trajectory: Option<Vec<FrameRecord>>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let mut world_rng = RngStream::new(config.seed, WORLD_STREAM);
        let mut rngs: Vec<RngStream> = (0..config.agents)
            .map(|i| RngStream::new(config.seed, i as u64 + 1))
            .collect();
        let (agents, targets) = init_world(&config, &mut world_rng, &mut rngs)?;
        Ok(Self::assemble(config, agents, targets, rngs))
    }

    /// Starts from an explicit layout instead of the seeded one. Agent `i`
    /// still draws its noise from stream `i + 1` of `config.seed`; the
    /// initial headings are taken as given.
    pub fn with_layout(
        config: SimConfig,
        agents: Vec<AgentState>,
        targets: Vec<Vec2>,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        if agents.len() != config.agents {
            return Err(ConfigError::new("n", "layout size differs from the agent count").into());
        }
        if config.targets_enabled && targets.len() != config.targets {
            return Err(ConfigError::new("t", "layout size differs from the target count").into());
        }
        let rngs = (0..config.agents)
            .map(|i| RngStream::new(config.seed, i as u64 + 1))
            .collect();
        let world = config.world();
        let agents = agents
            .into_iter()
            .enumerate()
            .map(|(id, a)| AgentState {
                id,
                position: world.wrap(a.position),
                direction: unit_from_angle(a.heading),
                ..a
            })
            .collect();
        Ok(Self::assemble(config, agents, targets, rngs))
    }

    fn assemble(
        config: SimConfig,
        agents: Vec<AgentState>,
        targets: Vec<Vec2>,
        rngs: Vec<RngStream>,
    ) -> Self {
        let world = config.world();
        let zones = config.zones();
        let n = config.agents;
        let coverage = (config.is_metrics_mode() && config.record.coverage)
            .then(|| CoverageGrid::new(world, config.r_t, config.coverage_mode));
        let mut sim = Self {
            world,
            zones,
            step: config.step_length(),
            budget: config.tick_budget(),
            tick: 0,
            next: agents.clone(),
            agents,
            rngs,
            targets: TargetIndex::new(targets, world, config.r_s.max(config.r_t)),
            grid: CellGrid::new(world, config.r_s).expect("validated radii"),
            grid_fresh: false,
            positions: Vec::with_capacity(n),
            neighbors: Vec::new(),
            counter: ComponentCounter::default(),
            comp_grid: CellGrid::new(world, config.r_s).expect("validated radii"),
            comp_positions: Vec::with_capacity(n),
            coverage,
            newly_detected: Vec::new(),
            arrival_ticks: vec![None; n],
            arrival_order: Vec::new(),
            arrival_targets: vec![None; n],
            components: Vec::new(),
            census: Vec::new(),
            lock_agent_ticks: 0,
            trajectory: config.record.trajectory.then(Vec::new),
            config,
        };
        sim.record();
        sim
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn targets(&self) -> &[Vec2] {
        &self.targets.positions
    }

    /// Ticks executed so far.
    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn coverage(&self) -> Option<&CoverageGrid> {
        self.coverage.as_ref()
    }

    pub fn all_arrived(&self) -> bool {
        self.agents.iter().all(|a| a.behavior.is_arrived())
    }

    pub fn is_finished(&self) -> bool {
        if self.tick >= self.budget {
            return true;
        }
        self.config.targets_enabled && self.all_arrived()
    }

    fn rebuild_grid(&mut self) {
        self.positions.clear();
        self.positions.extend(self.agents.iter().map(|a| a.position));
        self.grid.refill(self.positions.iter().copied().enumerate());
        self.grid_fresh = true;
    }

    /// Per-tick observables for the current snapshot.
    fn record(&mut self) {
        if self.config.record.components {
            let r_s = self.config.r_s;
            let c = if self.targets.any_fed {
                // Arrived agents sit exactly on their target, so each fed
                // target stands in for all of them: same count, and no
                // quadratic work over stacked agents.
                let pts = &mut self.comp_positions;
                pts.clear();
                pts.extend(
                    self.agents
                        .iter()
                        .filter(|a| !a.behavior.is_arrived())
                        .map(|a| a.position),
                );
                let t = &self.targets;
                pts.extend((0..t.positions.len()).filter(|&k| t.fed[k]).map(|k| t.positions[k]));
                self.comp_grid.refill(pts.iter().copied().enumerate());
                self.counter.count(&self.comp_grid, pts, r_s)
            } else {
                if !self.grid_fresh {
                    self.rebuild_grid();
                }
                self.counter.count(&self.grid, &self.positions, r_s)
            };
            self.components.push(c as u32);
        }
        if self.config.record.census {
            self.census.push(Census::of(&self.agents));
        }
        if let Some(cov) = self.coverage.as_mut() {
            cov.update(self.agents.iter().map(|a| &a.position));
        }
        if let Some(frames) = self.trajectory.as_mut() {
            frames.extend(self.agents.iter().map(|a| FrameRecord {
                tick: self.tick,
                agent: a.id,
                x: a.position.x,
                y: a.position.y,
                heading: a.heading,
                state: a.behavior.tag(),
            }));
        }
    }

    /// Advances every non-arrived agent by one synchronous tick.
    pub fn step(&mut self) {
        let tick = self.tick;
        let first_tick = tick == 0;
        let rho = self.config.rho;
        let social = rho > 0.0
            && self
                .agents
                .iter()
                .any(|a| matches!(a.behavior, BehaviorState::Search));
        if social && !self.grid_fresh {
            self.rebuild_grid();
        }

        let Self {
            config,
            world,
            zones,
            step,
            agents,
            next,
            rngs,
            targets,
            grid,
            neighbors,
            newly_detected,
            ..
        } = self;
        let step = *step;
        newly_detected.clear();

        for (i, a) in agents.iter().enumerate() {
            if a.behavior.is_arrived() {
                next[i] = *a;
                continue;
            }
            let pos = a.position;
            let nearest_target = if config.targets_enabled {
                targets.nearest(world, pos, zones.r_t, false)
            } else {
                None
            };
            let nearest_feeder = if targets.any_fed
                && matches!(a.behavior, BehaviorState::Search | BehaviorState::Lock { .. })
            {
                targets
                    .nearest(world, pos, zones.r_s, true)
                    .map(|(id, d)| (targets.positions[id], d))
            } else {
                None
            };
            let state = transition_state(a.behavior, nearest_target, nearest_feeder, zones);
            let mut out = *a;
            out.behavior = state;
            if matches!(state, BehaviorState::Find { .. })
                && !matches!(a.behavior, BehaviorState::Find { .. })
            {
                out.detected_tick = Some(tick);
                newly_detected.push(i);
            }

            match state {
                BehaviorState::Search => {
                    neighbors.clear();
                    if social {
                        grid.visit_within(pos, zones.r_s, Some(i), |j, offset, distance| {
                            let other = &agents[j];
                            if !other.behavior.is_arrived() {
                                neighbors.push(Neighbor {
                                    offset,
                                    heading: other.direction,
                                    distance,
                                });
                            }
                        })
                        .expect("grid cell equals r_s");
                    }
                    let upd = search_update(
                        a.heading,
                        config.sigma,
                        rho,
                        first_tick,
                        neighbors,
                        zones,
                        &mut rngs[i],
                    );
                    out.direction = upd.d_final;
                    out.heading = if upd.d_social.is_some() {
                        upd.d_final.angle_deg()
                    } else {
                        wrap_degrees(a.heading + upd.beta_draw)
                    };
                    out.position = world.wrap(pos + upd.d_final * step);
                }
                BehaviorState::Find { target } => {
                    let goal = targets.positions[target];
                    if steer(world, &mut out, goal, step) {
                        out.behavior = BehaviorState::Arrived { target };
                        out.arrival_tick = out.detected_tick;
                    }
                }
                BehaviorState::Lock { anchor } => {
                    steer(world, &mut out, anchor, step);
                }
                BehaviorState::Arrived { .. } => unreachable!("handled above"),
            }
            next[i] = out;
        }

        std::mem::swap(agents, next);
        for &i in newly_detected.iter() {
            let a = &agents[i];
            self.arrival_ticks[i] = a.detected_tick;
            self.arrival_targets[i] = a.behavior.target_id();
            self.arrival_order.push(i);
        }
        for a in agents.iter() {
            if matches!(a.behavior, BehaviorState::Lock { .. }) {
                self.lock_agent_ticks += 1;
            }
            if let BehaviorState::Arrived { target } = a.behavior {
                if !targets.fed[target] {
                    targets.fed[target] = true;
                    targets.any_fed = true;
                }
            }
        }
        self.tick += 1;
        self.grid_fresh = false;
        self.record();
    }

    /// Steps until the run is over.
    pub fn run_to_end(&mut self) {
        while !self.is_finished() {
            self.step();
        }
    }

    pub fn into_log(self) -> EventLog {
        EventLog {
            ticks_run: self.tick,
            targets: self.targets.positions,
            arrival_ticks: self.arrival_ticks,
            arrival_order: self.arrival_order,
            arrival_targets: self.arrival_targets,
            components: self.components,
            census: self.census,
            lock_agent_ticks: self.lock_agent_ticks,
            coverage: self.coverage.map(|c| CoverageLog {
                cells_per_side: c.cells_per_side(),
                total_cells: c.total_cells(),
                history: c.into_history(),
            }),
            trajectory: self.trajectory,
            config: self.config,
        }
    }
}

/// Moves `agent` toward `goal`; snaps onto it when within one step.
/// Returns true on a snap.
fn steer(world: &TorusSpec, agent: &mut AgentState, goal: Vec2, step: f64) -> bool {
    let delta = world.delta(agent.position, goal);
    let dist = delta.norm();
    if dist > 0.0 {
        agent.direction = delta * (1.0 / dist);
        agent.heading = agent.direction.angle_deg();
    }
    if dist <= step {
        agent.position = goal;
        true
    } else {
        agent.position = world.wrap(agent.position + agent.direction * step);
        false
    }
}

/// Runs one replicate to completion.
pub fn run_simulation(config: &SimConfig) -> Result<EventLog, EngineError> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run_to_end();
    Ok(sim.into_log())
}
