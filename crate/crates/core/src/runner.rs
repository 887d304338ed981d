//! Scenario runs, parameter sweeps, walk-library reports and the files they
//! write. The `rabbit-patrol` binary is a thin wrapper over this module.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{assign_walk, AgentId, IdlenessTable, PolicyState, Variant};
use crate::graph::{NodeId, PatrolGraph, ShortestPathTable};
use crate::metrics::{aggregate, RunMetrics, Summary};
use crate::sim::{EventKind, GraphSource, LogRecord, Scenario, ScenarioConfig, SimulationRun};
use crate::walks::{build_walk_library, LibraryStats, WalkLibrary};
use crate::{format_seconds, ticks_to_seconds, Error, Result, Ticks};

pub use crate::sim::{initialize, AssignmentRecord};

pub const VISIT_LOG_FILE: &str = "visit_log.csv";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const LIBRARY_STATS_FILE: &str = "library_stats.json";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ScenarioConfig,
    pub run: SimulationRun,
    pub metrics: RunMetrics,
}

/// Initializes, runs to the horizon and computes metrics.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutcome> {
    let mut run = initialize(config)?;
    run.run_to_horizon()?;
    let metrics = run.metrics();
    Ok(RunOutcome {
        config: config.clone(),
        run,
        metrics,
    })
}

/// Same as [`run_scenario`] but reusing an already prepared scenario.
pub fn run_prepared(scenario: &Scenario, config: &ScenarioConfig) -> Result<RunOutcome> {
    let mut run = SimulationRun::start(scenario.clone(), config)?;
    run.run_to_horizon()?;
    let metrics = run.metrics();
    Ok(RunOutcome {
        config: config.clone(),
        run,
        metrics,
    })
}

/// Per-run JSON report. Contains no wall-clock quantities, so identical
/// configurations produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub graph_hash: String,
    pub priority: Vec<NodeId>,
    pub start_nodes: Vec<NodeId>,
    pub horizon_s: f64,
    pub priority_max_idleness_s: f64,
    pub graph_max_idleness_s: f64,
    /// `null` when the priority maximum is zero.
    pub idleness_ratio: Option<f64>,
    pub per_node_max_s: Vec<f64>,
    pub visit_counts: Vec<u64>,
    pub assignments: usize,
    pub greedy_counters: Vec<u64>,
    pub library: LibraryStats,
}

impl MetricsReport {
    pub fn new(outcome: &RunOutcome) -> Self {
        let run = &outcome.run;
        let m = &outcome.metrics;
        MetricsReport {
            config: outcome.config.clone(),
            seed: outcome.config.seed,
            graph_hash: run.graph().content_hash(),
            priority: run.graph().priority().to_vec(),
            start_nodes: run.start_nodes().to_vec(),
            horizon_s: ticks_to_seconds(m.horizon),
            priority_max_idleness_s: m.priority_max_idleness(),
            graph_max_idleness_s: m.graph_max_idleness(),
            idleness_ratio: m.idleness_ratio(),
            per_node_max_s: m.per_node_max.iter().map(|&t| ticks_to_seconds(t)).collect(),
            visit_counts: m.visit_counts.clone(),
            assignments: run.assignments().len(),
            greedy_counters: run.policy().counters().to_vec(),
            library: run.library().stats().clone(),
        }
    }
}

/// Visit log CSV: `time_s,agent_id,node_id,walk_id,event_kind`.
pub fn write_visit_log<W: Write>(out: W, log: &[LogRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_s", "agent_id", "node_id", "walk_id", "event_kind"])?;
    for r in log {
        let kind = match r.kind {
            EventKind::Arrival => "arrival",
            EventKind::Assignment => "assignment",
        };
        w.write_record([
            format_seconds(r.time),
            r.agent.to_string(),
            r.node.to_string(),
            r.walk_id.to_string(),
            kind.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("visit log", e))?;
    Ok(())
}

/// Assignment details, including the host decision time in microseconds.
pub fn write_assignments<W: Write>(out: W, records: &[AssignmentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "time_s",
        "agent_id",
        "walk_id",
        "variant",
        "source",
        "target",
        "reward_s",
        "candidates_searched",
        "walk_nodes",
        "decision_us",
    ])?;
    for r in records {
        w.write_record([
            format_seconds(r.time),
            r.agent.to_string(),
            r.walk_id.to_string(),
            r.variant.to_string(),
            r.source.to_string(),
            r.target.to_string(),
            format_seconds(r.reward),
            r.candidates_searched.to_string(),
            r.walk_nodes.to_string(),
            r.decision_micros.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("assignments", e))?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the visit log, assignment log, metrics report and library stats
/// into `dir`, creating it if needed.
pub fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths: Vec<PathBuf> = [VISIT_LOG_FILE, ASSIGNMENTS_FILE, METRICS_FILE, LIBRARY_STATS_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_visit_log(create(&paths[0])?, outcome.run.log())?;
    write_assignments(create(&paths[1])?, outcome.run.assignments())?;
    let mut report = create(&paths[2])?;
    serde_json::to_writer_pretty(&mut report, &MetricsReport::new(outcome))?;
    report.flush().map_err(|e| Error::io(&paths[2], e))?;
    let mut stats = create(&paths[3])?;
    serde_json::to_writer_pretty(&mut stats, outcome.run.library().stats())?;
    stats.flush().map_err(|e| Error::io(&paths[3], e))?;
    Ok(paths)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub graphs: Vec<GraphSource>,
    pub priority_counts: Vec<usize>,
    pub agent_counts: Vec<usize>,
    pub hops: Vec<usize>,
    pub variants: Vec<Variant>,
    /// One run per seed; the seed also picks the agents' start nodes.
    pub seeds: Vec<u64>,
    pub horizon: f64,
    pub speed: f64,
    /// `N` for the sampled variant, clamped to `|S|`.
    pub sample_n: usize,
    pub mem_cap: Option<u64>,
    pub lib_cache: Option<PathBuf>,
}

impl Default for SweepSpec {
    /// The simulation grid on the built-in 5x5 grid at desk scale: 27
    /// settings per variant, 4 variants, 3 seeds, 2,000 s horizon.
    fn default() -> Self {
        SweepSpec {
            graphs: vec![GraphSource::Grid5],
            priority_counts: vec![4, 5, 6],
            agent_counts: vec![2, 3, 4],
            hops: vec![0, 3, 5],
            variants: Variant::ALL.to_vec(),
            seeds: vec![1, 2, 3],
            horizon: 2_000.0,
            speed: crate::sim::DEFAULT_SPEED,
            sample_n: 2,
            mem_cap: None,
            lib_cache: None,
        }
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SweepCell {
    pub graph: GraphSource,
    pub priority_count: usize,
    pub agents: usize,
    pub hops: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl SweepSpec {
    /// Settings per variant (product over graphs, |S|, agents and H).
    pub fn settings_per_variant(&self) -> usize {
        self.graphs.len() * self.priority_counts.len() * self.agent_counts.len() * self.hops.len()
    }

    pub fn run_count(&self) -> usize {
        self.settings_per_variant() * self.variants.len() * self.seeds.len()
    }

    /// Cells in row order: graph, |S|, agents, H, variant, seed.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut cells = Vec::with_capacity(self.run_count());
        for graph in &self.graphs {
            for &priority_count in &self.priority_counts {
                for &agents in &self.agent_counts {
                    for &hops in &self.hops {
                        for &variant in &self.variants {
                            for &seed in &self.seeds {
                                cells.push(SweepCell {
                                    graph: graph.clone(),
                                    priority_count,
                                    agents,
                                    hops,
                                    variant,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        cells
    }

    pub fn config_for(&self, cell: &SweepCell) -> ScenarioConfig {
        ScenarioConfig {
            graph: cell.graph.clone(),
            priority: None,
            priority_count: Some(cell.priority_count),
            agents: cell.agents,
            start_nodes: None,
            hops: cell.hops,
            variant: cell.variant,
            sample_n: (cell.variant == Variant::Sampled).then(|| self.sample_n.clamp(1, cell.priority_count)),
            seed: cell.seed,
            speed: self.speed,
            horizon: self.horizon,
            mem_cap: self.mem_cap,
            lib_cache: self.lib_cache.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub graph: String,
    pub priority_count: usize,
    pub agents: usize,
    pub hops: usize,
    pub variant: Variant,
    pub seed: u64,
    pub priority_max_idleness_s: f64,
    pub graph_max_idleness_s: f64,
    pub idleness_ratio: Option<f64>,
    pub unvisited_nodes: usize,
    pub assignments: usize,
    pub max_candidates_searched: usize,
    pub greedy_counter_spread: u64,
    pub library_walks: usize,
}

impl SweepRow {
    fn new(cell: &SweepCell, outcome: &RunOutcome) -> Self {
        let m = &outcome.metrics;
        let counters = outcome.run.policy().counters();
        SweepRow {
            graph: cell.graph.name(),
            priority_count: cell.priority_count,
            agents: cell.agents,
            hops: cell.hops,
            variant: cell.variant,
            seed: cell.seed,
            priority_max_idleness_s: m.priority_max_idleness(),
            graph_max_idleness_s: m.graph_max_idleness(),
            idleness_ratio: m.idleness_ratio(),
            unvisited_nodes: m.unvisited_nodes(),
            assignments: outcome.run.assignments().len(),
            max_candidates_searched: outcome
                .run
                .assignments()
                .iter()
                .map(|a| a.candidates_searched)
                .max()
                .unwrap_or(0),
            greedy_counter_spread: counters.iter().max().unwrap_or(&0) - counters.iter().min().unwrap_or(&0),
            library_walks: outcome.run.library().total_walks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub cell: SweepCell,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// Runs every cell of the sweep in parallel on `workers` threads (0 means
/// one per core). Walk libraries are built once per (graph, |S|, H). Failed
/// cells are reported, not fatal; rows keep [`SweepSpec::cells`] order.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| sweep_inner(spec))
}

fn sweep_inner(spec: &SweepSpec) -> Result<SweepReport> {
    let cells = spec.cells();
    let mut keys: Vec<(GraphSource, usize, usize)> = cells
        .iter()
        .map(|c| (c.graph.clone(), c.priority_count, c.hops))
        .collect();
    keys.sort();
    keys.dedup();

    let prepared: BTreeMap<_, std::result::Result<Scenario, String>> = keys
        .par_iter()
        .map(|key| {
            let probe = SweepCell {
                graph: key.0.clone(),
                priority_count: key.1,
                agents: 1,
                hops: key.2,
                variant: Variant::Greedy,
                seed: 0,
            };
            let scenario = Scenario::prepare(&spec.config_for(&probe)).map_err(|e| e.to_string());
            (key.clone(), scenario)
        })
        .collect();

    let results: Vec<std::result::Result<SweepRow, String>> = cells
        .par_iter()
        .map(|cell| {
            let key = (cell.graph.clone(), cell.priority_count, cell.hops);
            let scenario = prepared[&key].as_ref().map_err(Clone::clone)?;
            run_prepared(scenario, &spec.config_for(cell))
                .map(|outcome| SweepRow::new(cell, &outcome))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut report = SweepReport::default();
    for (cell, result) in cells.into_iter().zip(results) {
        match result {
            Ok(row) => report.rows.push(row),
            Err(error) => report.failures.push(SweepFailure { cell, error }),
        }
    }
    Ok(report)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("sweep csv", e))?;
    Ok(())
}

/// Grouping key for box-plot summaries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub graph: String,
    pub priority_count: usize,
    pub agents: usize,
    pub hops: usize,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub priority_max_idleness_s: Summary,
    pub graph_max_idleness_s: Summary,
    /// Over runs with a defined ratio; `None` if there are none.
    pub idleness_ratio: Option<Summary>,
}

/// Summaries over the repeats of each sweep setting.
pub fn summarize_sweep(rows: &[SweepRow]) -> Result<Vec<CellSummary>> {
    let mut groups: BTreeMap<CellKey, Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(CellKey {
                graph: row.graph.clone(),
                priority_count: row.priority_count,
                agents: row.agents,
                hops: row.hops,
                variant: row.variant,
            })
            .or_default()
            .push(row);
    }
    groups
        .into_iter()
        .map(|(key, rows)| {
            let prio: Vec<f64> = rows.iter().map(|r| r.priority_max_idleness_s).collect();
            let graph: Vec<f64> = rows.iter().map(|r| r.graph_max_idleness_s).collect();
            let ratio: Vec<f64> = rows.iter().filter_map(|r| r.idleness_ratio).collect();
            Ok(CellSummary {
                key,
                priority_max_idleness_s: aggregate(&prio)?,
                graph_max_idleness_s: aggregate(&graph)?,
                idleness_ratio: aggregate(&ratio).ok(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Library statistics and decision-time benchmark
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTiming {
    pub variant: Variant,
    pub calls: usize,
    pub mean_micros: f64,
    pub mean_candidates: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibStatsRow {
    pub hops: usize,
    pub total_walks: usize,
    pub estimated_bytes: u64,
    pub build_millis: f64,
    pub per_source: Vec<usize>,
    pub decisions: Vec<DecisionTiming>,
}

/// Random but reproducible decision states: idleness tables with last-visit
/// times spread over `[0, span)` and a source cycling through the priority set.
pub fn benchmark_states(graph: &PatrolGraph, count: usize, seed: u64) -> Vec<(NodeId, IdlenessTable, Ticks)> {
    let span: Ticks = 1_000 * crate::TICKS_PER_SECOND;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut table = IdlenessTable::new(graph.node_count());
            for node in graph.nodes() {
                table.set_last_visit(node, rng.gen_range(0..span));
            }
            let source = graph.priority()[i % graph.priority().len()];
            (source, table, span)
        })
        .collect()
}

/// Mean wall-clock time of [`assign_walk`] per variant over the same states.
pub fn benchmark_decisions(
    graph: &PatrolGraph,
    library: &WalkLibrary,
    variants: &[Variant],
    states: &[(NodeId, IdlenessTable, Ticks)],
    seed: u64,
) -> Result<Vec<DecisionTiming>> {
    let sample_n = graph.priority().len().div_ceil(2);
    variants
        .iter()
        .map(|&variant| {
            let mut policy = PolicyState::new(variant, graph.priority(), Some(sample_n), seed)?;
            let mut micros = 0.0;
            let mut candidates = 0usize;
            for (source, table, t) in states {
                let started = Instant::now();
                let a = assign_walk(library, *source, table, *t, &mut policy, AgentId(0))?;
                micros += started.elapsed().as_secs_f64() * 1e6;
                candidates += a.candidates_searched;
            }
            let calls = states.len().max(1);
            Ok(DecisionTiming {
                variant,
                calls: states.len(),
                mean_micros: micros / calls as f64,
                mean_candidates: candidates as f64 / calls as f64,
            })
        })
        .collect()
}

/// Walk counts, estimated memory and decision timings for each H.
pub fn library_report(
    graph: &PatrolGraph,
    paths: &ShortestPathTable,
    hops: &[usize],
    mem_cap: Option<u64>,
    bench_calls: usize,
) -> Result<Vec<LibStatsRow>> {
    let states = benchmark_states(graph, bench_calls, 0);
    hops.iter()
        .map(|&h| {
            let started = Instant::now();
            let lib = build_walk_library(graph, paths, h, mem_cap)?;
            let build_millis = started.elapsed().as_secs_f64() * 1e3;
            let decisions = if bench_calls > 0 {
                benchmark_decisions(graph, &lib, &Variant::ALL, &states, 0)?
            } else {
                Vec::new()
            };
            let stats = lib.stats();
            Ok(LibStatsRow {
                hops: h,
                total_walks: stats.total_walks,
                estimated_bytes: stats.estimated_bytes,
                build_millis,
                per_source: stats.per_source.iter().map(|s| s.walks).collect(),
                decisions,
            })
        })
        .collect()
}
