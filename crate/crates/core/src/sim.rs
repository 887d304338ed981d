//! Deterministic event-driven multi-agent patrolling simulator.
//!
//! Agents traverse timed edges; each node arrival updates the shared
//! idleness table, and an agent that reaches the end of its walk is
//! immediately assigned a new one. Events are ordered by `(time, agent id)`
//! and every quantity is integer ticks, so a run is a pure function of its
//! configuration and seed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{assign_walk, AgentId, IdlenessTable, PolicyState, Variant};
use crate::graph::{all_pairs_shortest_paths, GraphDocument, NodeId, PatrolGraph, ShortestPathTable};
use crate::metrics::{compute_metrics, RunMetrics};
use crate::walks::{build_walk_library, WalkLibrary};
use crate::{seconds_to_ticks, Error, Result, Ticks};

/// Edge length of the built-in 5x5 grid, in meters.
pub const GRID5_EDGE_LENGTH: f64 = 50.0;

/// Default travel speed, meters per second.
pub const DEFAULT_SPEED: f64 = 10.0;

// Start-node draws use their own stream so they never perturb policy draws.
const START_STREAM: u64 = 0x5354_4152_5453;

/// Where a scenario's graph comes from: the built-in `grid5` or a graph
/// document on disk.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GraphSource {
    Grid5,
    File(PathBuf),
}

impl GraphSource {
    pub fn name(&self) -> String {
        match self {
            GraphSource::Grid5 => "grid5".to_string(),
            GraphSource::File(p) => p.display().to_string(),
        }
    }

    /// Loads the graph. Grid sources carry no priority set of their own.
    pub fn document(&self) -> Result<GraphDocument> {
        match self {
            GraphSource::Grid5 => Ok(GraphDocument {
                grid: Some(crate::graph::GridSpec {
                    rows: 5,
                    cols: 5,
                    edge_length: GRID5_EDGE_LENGTH,
                }),
                ..GraphDocument::default()
            }),
            GraphSource::File(path) => GraphDocument::read(path),
        }
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for GraphSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Config("empty graph source".into()));
        }
        Ok(if s == "grid5" {
            GraphSource::Grid5
        } else {
            GraphSource::File(PathBuf::from(s))
        })
    }
}

impl TryFrom<String> for GraphSource {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<GraphSource> for String {
    fn from(value: GraphSource) -> Self {
        value.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graph: GraphSource,
    /// Explicit priority set; overrides `priority_count` and the document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<u32>>,
    /// Number of well-spread priority nodes to pick automatically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority_count: Option<usize>,
    pub agents: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_nodes: Option<Vec<u32>>,
    pub hops: usize,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Meters per second.
    #[serde(default = "default_speed")]
    pub speed: f64,
    /// Seconds.
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mem_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lib_cache: Option<PathBuf>,
}

fn default_speed() -> f64 {
    DEFAULT_SPEED
}

impl ScenarioConfig {
    /// Built-in 5x5 grid with one greedy agent, H=0 and a 2,000 s horizon.
    pub fn grid5(priority: Vec<u32>) -> Self {
        ScenarioConfig {
            graph: GraphSource::Grid5,
            priority: Some(priority),
            priority_count: None,
            agents: 1,
            start_nodes: None,
            hops: 0,
            variant: Variant::Greedy,
            sample_n: None,
            seed: 0,
            speed: DEFAULT_SPEED,
            horizon: 2_000.0,
            mem_cap: None,
            lib_cache: None,
        }
    }

    pub fn horizon_ticks(&self) -> Ticks {
        seconds_to_ticks(self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::Config("at least one agent is required".into()));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::Config(format!(
                "horizon must be non-negative, got {}",
                self.horizon
            )));
        }
        if self.variant == Variant::Sampled && self.sample_n.is_none() {
            return Err(Error::Config("--variant sampled requires --sample-n".into()));
        }
        if let Some(starts) = &self.start_nodes {
            if starts.len() != self.agents {
                return Err(Error::Config(format!(
                    "{} start nodes given for {} agents",
                    starts.len(),
                    self.agents
                )));
            }
        }
        Ok(())
    }
}

/// Graph, shortest paths and walk library: everything a run reads but never
/// mutates. Shared between runs of a sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: Arc<PatrolGraph>,
    pub paths: Arc<ShortestPathTable>,
    pub library: Arc<WalkLibrary>,
}

impl Scenario {
    /// Loads the graph, resolves the priority set and builds (or loads) the
    /// walk library.
    pub fn prepare(config: &ScenarioConfig) -> Result<Self> {
        let (graph, paths) = resolve_graph(config)?;
        let library = match &config.lib_cache {
            Some(dir) => WalkLibrary::load_or_build(dir, &graph, &paths, config.hops, config.mem_cap)?,
            None => build_walk_library(&graph, &paths, config.hops, config.mem_cap)?,
        };
        Ok(Scenario {
            graph: Arc::new(graph),
            paths: Arc::new(paths),
            library: Arc::new(library),
        })
    }
}

/// Loads the configured graph and applies the priority selection rule:
/// explicit list, else `priority_count` spread nodes, else the document's own
/// priority list.
pub fn resolve_graph(config: &ScenarioConfig) -> Result<(PatrolGraph, ShortestPathTable)> {
    let mut doc = config.graph.document()?;
    if let Some(p) = &config.priority {
        doc.priority = p.clone();
        let graph = doc.build(config.speed)?;
        let paths = all_pairs_shortest_paths(&graph);
        return Ok((graph, paths));
    }
    match config.priority_count {
        Some(count) => {
            // Shortest paths do not depend on the priority set, so a
            // placeholder set is enough to measure distances.
            doc.priority = vec![0];
            let placeholder = doc.build(config.speed)?;
            let paths = all_pairs_shortest_paths(&placeholder);
            let chosen = placeholder.spread_nodes(&paths, count);
            Ok((placeholder.with_priority(&chosen)?, paths))
        }
        None if !doc.priority.is_empty() => {
            let graph = doc.build(config.speed)?;
            let paths = all_pairs_shortest_paths(&graph);
            Ok((graph, paths))
        }
        None => Err(Error::Config(format!(
            "graph `{}` has no priority set; pass --priority or --priority-count",
            config.graph
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Arrival,
    Assignment,
}

/// One row of the visit log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogRecord {
    pub time: Ticks,
    pub agent: AgentId,
    pub node: NodeId,
    pub walk_id: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentRecord {
    pub time: Ticks,
    pub agent: AgentId,
    pub walk_id: u64,
    pub variant: Variant,
    pub source: NodeId,
    pub target: NodeId,
    pub reward: Ticks,
    pub candidates_searched: usize,
    pub walk_nodes: usize,
    /// Host wall-clock time spent deciding. Not part of any simulated
    /// quantity.
    pub decision_micros: u64,
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: AgentId,
    pub walk_id: u64,
    pub walk: Vec<NodeId>,
    /// Index into `walk` of the last node reached.
    pub cursor: usize,
    pub position: NodeId,
    /// Time of the agent's pending arrival.
    pub busy_until: Ticks,
}

impl AgentState {
    pub fn next_node(&self) -> Option<NodeId> {
        self.walk.get(self.cursor + 1).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Scheduled {
    time: Ticks,
    agent: AgentId,
    index: usize,
}

/// What a single [`SimulationRun::step`] did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub arrival: LogRecord,
    pub assignment: Option<AssignmentRecord>,
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    scenario: Scenario,
    policy: PolicyState,
    idleness: IdlenessTable,
    clock: Ticks,
    horizon: Ticks,
    queue: BinaryHeap<Reverse<Scheduled>>,
    agents: Vec<AgentState>,
    start_nodes: Vec<NodeId>,
    log: Vec<LogRecord>,
    assignments: Vec<AssignmentRecord>,
    next_walk_id: u64,
    finished: bool,
}

/// Prepares the scenario and places the agents.
pub fn initialize(config: &ScenarioConfig) -> Result<SimulationRun> {
    config.validate()?;
    let scenario = Scenario::prepare(config)?;
    SimulationRun::start(scenario, config)
}

fn choose_start_nodes(config: &ScenarioConfig, graph: &PatrolGraph) -> Result<Vec<NodeId>> {
    if let Some(starts) = &config.start_nodes {
        return starts
            .iter()
            .map(|&s| {
                let node = NodeId(s);
                if graph.contains(node) {
                    Ok(node)
                } else {
                    Err(Error::Config(format!("start node {s} is not in the graph")))
                }
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(START_STREAM);
    let n = graph.node_count();
    Ok(if config.agents <= n {
        index::sample(&mut rng, n, config.agents)
            .into_iter()
            .map(|i| NodeId(i as u32))
            .collect()
    } else {
        (0..config.agents).map(|_| NodeId(rng.gen_range(0..n) as u32)).collect()
    })
}

impl SimulationRun {
    /// Places agents and schedules their arrival at the start node at t=0.
    /// Agents off the priority set first take the shortest path to the
    /// nearest priority node (smaller id on ties).
    pub fn start(scenario: Scenario, config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        if scenario.library.hops() != config.hops {
            return Err(Error::Config(format!(
                "library was built for H={}, config asks for H={}",
                scenario.library.hops(),
                config.hops
            )));
        }
        let graph = &scenario.graph;
        let policy = PolicyState::new(config.variant, graph.priority(), config.sample_n, config.seed)?;
        let starts = choose_start_nodes(config, graph)?;

        let mut queue = BinaryHeap::new();
        let mut agents = Vec::with_capacity(starts.len());
        for (i, &start) in starts.iter().enumerate() {
            let id = AgentId(i as u32);
            let walk = if graph.is_priority(start) {
                vec![start]
            } else {
                let nearest = *graph
                    .priority()
                    .iter()
                    .min_by_key(|&&p| (scenario.paths.dist(start, p), p))
                    .expect("priority set is non-empty");
                scenario.paths.path(start, nearest)
            };
            agents.push(AgentState {
                id,
                walk_id: i as u64,
                walk,
                cursor: 0,
                position: start,
                busy_until: 0,
            });
            queue.push(Reverse(Scheduled {
                time: 0,
                agent: id,
                index: 0,
            }));
        }

        Ok(SimulationRun {
            idleness: IdlenessTable::new(graph.node_count()),
            policy,
            clock: 0,
            horizon: config.horizon_ticks(),
            queue,
            next_walk_id: agents.len() as u64,
            agents,
            start_nodes: starts,
            log: Vec::new(),
            assignments: Vec::new(),
            finished: false,
            scenario,
        })
    }

    /// Processes the earliest pending arrival. Returns `None` once the next
    /// event falls at or beyond the horizon.
    pub fn step(&mut self) -> Result<Option<StepRecord>> {
        let next = match self.queue.peek() {
            Some(Reverse(next)) => *next,
            None => return Err(Error::SimulationStalled("event queue is empty".into())),
        };
        if self.finished || next.time >= self.horizon {
            self.finished = true;
            return Ok(None);
        }
        self.queue.pop();
        debug_assert!(next.time >= self.clock);
        self.clock = next.time;
        let now = self.clock;

        let agent = &mut self.agents[next.agent.0 as usize];
        agent.cursor = next.index;
        agent.position = agent.walk[next.index];
        let node = agent.position;
        let arrival = LogRecord {
            time: now,
            agent: agent.id,
            node,
            walk_id: agent.walk_id,
            kind: EventKind::Arrival,
        };
        self.log.push(arrival);
        self.idleness.record_visit(node, now);

        let mut assignment = None;
        if agent.cursor + 1 == agent.walk.len() {
            let started = Instant::now();
            let decided = assign_walk(
                &self.scenario.library,
                node,
                &self.idleness,
                now,
                &mut self.policy,
                agent.id,
            )
            .map_err(|e| Error::SimulationStalled(format!("agent {} at node {node}: {e}", agent.id)))?;
            let decision_micros = started.elapsed().as_micros() as u64;

            let walk_id = self.next_walk_id;
            self.next_walk_id += 1;
            let record = AssignmentRecord {
                time: now,
                agent: agent.id,
                walk_id,
                variant: self.policy.variant(),
                source: node,
                target: decided.walk.target,
                reward: decided.reward,
                candidates_searched: decided.candidates_searched,
                walk_nodes: decided.walk.nodes.len(),
                decision_micros,
            };
            self.log.push(LogRecord {
                time: now,
                agent: agent.id,
                node,
                walk_id,
                kind: EventKind::Assignment,
            });
            self.assignments.push(record.clone());
            agent.walk = decided.walk.nodes;
            agent.walk_id = walk_id;
            agent.cursor = 0;
            assignment = Some(record);
        }

        let to = agent
            .next_node()
            .ok_or_else(|| Error::SimulationStalled(format!("agent {} has an empty walk", agent.id)))?;
        let travel = self
            .scenario
            .graph
            .travel_ticks(agent.position, to)
            .ok_or_else(|| Error::SimulationStalled(format!("no edge {}->{to}", agent.position)))?;
        agent.busy_until = now + travel;
        self.queue.push(Reverse(Scheduled {
            time: agent.busy_until,
            agent: agent.id,
            index: agent.cursor + 1,
        }));

        Ok(Some(StepRecord { arrival, assignment }))
    }

    /// Runs every event before the horizon, then closes the open idleness
    /// gaps at the horizon.
    pub fn run_to_horizon(&mut self) -> Result<()> {
        while self.step()?.is_some() {}
        self.idleness.finalize(self.horizon);
        Ok(())
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn clock(&self) -> Ticks {
        self.clock
    }

    pub fn horizon(&self) -> Ticks {
        self.horizon
    }

    pub fn graph(&self) -> &PatrolGraph {
        &self.scenario.graph
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn library(&self) -> &WalkLibrary {
        &self.scenario.library
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn start_nodes(&self) -> &[NodeId] {
        &self.start_nodes
    }

    pub fn policy(&self) -> &PolicyState {
        &self.policy
    }

    pub fn idleness(&self) -> &IdlenessTable {
        &self.idleness
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn assignments(&self) -> &[AssignmentRecord] {
        &self.assignments
    }

    /// Number of events waiting in the queue (one per agent).
    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn metrics(&self) -> RunMetrics {
        compute_metrics(&self.scenario.graph, &self.log, self.horizon)
    }
}
