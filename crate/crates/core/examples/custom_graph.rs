//! Loads a graph document from disk, inspects its shortest paths and
//! patrols it with two agents.
//!
//! cargo run --example custom_graph [path/to/graph.json]

use std::path::PathBuf;

use rabbit_patrol::assignment::Variant;
use rabbit_patrol::graph::{all_pairs_shortest_paths, GraphDocument, NodeId};
use rabbit_patrol::runner::run_scenario;
use rabbit_patrol::sim::{GraphSource, ScenarioConfig};

fn main() -> rabbit_patrol::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/ring_with_spokes.json"));

    let graph = GraphDocument::read(&path)?.build(10.0)?;
    let paths = all_pairs_shortest_paths(&graph);
    println!(
        "{}: {} nodes, priority {:?}",
        path.display(),
        graph.node_count(),
        graph.priority()
    );
    for (a, b) in [(1, 3), (3, 1), (4, 2)] {
        let (a, b) = (NodeId(a), NodeId(b));
        println!(
            "  {a} -> {b}: {:?} in {} s",
            paths.path(a, b),
            paths.dist(a, b) as f64 / 1e6
        );
    }

    let config = ScenarioConfig {
        graph: GraphSource::File(path),
        priority: None,
        agents: 2,
        hops: 2,
        variant: Variant::Exhaustive,
        horizon: 3_600.0,
        ..ScenarioConfig::grid5(Vec::new())
    };
    let outcome = run_scenario(&config)?;
    let m = &outcome.metrics;
    println!("\none hour, two agents, H=2, exhaustive:");
    for node in graph.nodes() {
        let tag = if graph.is_priority(node) { "*" } else { " " };
        println!(
            "  node {node}{tag} visited {:>3} times, longest gap {:>6.1} s",
            m.visit_counts[node.index()],
            m.per_node_max[node.index()] as f64 / 1e6
        );
    }
    println!("idleness ratio {:.3}", m.idleness_ratio().unwrap_or(f64::NAN));
    Ok(())
}
