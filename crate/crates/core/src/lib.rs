//! Priority patrolling with Rabbit Walks.
//!
//! The crate is organized around the two phases of the patrolling strategy
//! plus the machinery needed to evaluate it:
//!
//! - [`graph`]: the patrol environment (a strongly connected digraph with
//!   timed edges and a priority node subset) and exact all-pairs shortest
//!   paths.
//! - [`walks`]: offline generation of Rabbit Walks (a depth-`H` exploratory
//!   hop followed by two shortest-path hops through an intermediate node)
//!   into a [`walks::WalkLibrary`].
//! - [`assignment`]: online selection of the next walk for an agent using
//!   one of the four target-selection variants and the idleness-sum reward.
//! - [`sim`]: a deterministic discrete-event simulator driving several
//!   agents over the graph.
//! - [`metrics`]: priority/graph maximum idleness, idleness ratio and
//!   box-plot summaries.
//! - [`runner`]: scenario configs, sweeps, library statistics and the file
//!   artifacts written by the `rabbit-patrol` binary.
//!
//! Time is measured in integer microsecond [`Ticks`] everywhere inside the
//! engine, so runs are bit-reproducible across platforms.
//!
//! ```
//! use rabbit_patrol::{assignment::Variant, sim::ScenarioConfig};
//!
//! let mut config = ScenarioConfig::grid5(vec![0, 4, 20, 24]);
//! config.agents = 2;
//! config.hops = 3;
//! config.variant = Variant::Greedy;
//! let outcome = rabbit_patrol::runner::run_scenario(&config).unwrap();
//! assert_eq!(outcome.metrics.unvisited_nodes(), 0);
//! println!("graph max idleness: {} s", outcome.metrics.graph_max_idleness());
//! ```

pub mod assignment;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod runner;
pub mod sim;
pub mod walks;

pub use error::{Error, Result};
pub use graph::{NodeId, PatrolGraph, ShortestPathTable};

/// Simulation time unit: one microsecond.
pub type Ticks = u64;

pub const TICKS_PER_SECOND: Ticks = 1_000_000;

/// Converts seconds to ticks, rounding half up.
pub fn seconds_to_ticks(seconds: f64) -> Ticks {
    (seconds * TICKS_PER_SECOND as f64).round() as Ticks
}

pub fn ticks_to_seconds(ticks: Ticks) -> f64 {
    ticks as f64 / TICKS_PER_SECOND as f64
}

/// Formats ticks as seconds with exactly six decimals, using integer math only.
pub fn format_seconds(ticks: Ticks) -> String {
    format!("{}.{:06}", ticks / TICKS_PER_SECOND, ticks % TICKS_PER_SECOND)
}
