//! Builds walk libraries for the 5x5 grid at several depths and shows how
//! their size compares with the worst-case bound.
//!
//! cargo run --release --example walk_library

use rabbit_patrol::graph::{all_pairs_shortest_paths, NodeId, PatrolGraph};
use rabbit_patrol::walks::{build_walk_library, walk_count_bound};

fn main() -> rabbit_patrol::Result<()> {
    let grid = PatrolGraph::grid(5, 5, 50.0, &[0, 4, 20, 24], 10.0)?;
    let paths = all_pairs_shortest_paths(&grid);
    println!(
        "{} nodes, {} edges, priority {:?}",
        grid.node_count(),
        grid.edge_count(),
        grid.priority()
    );

    for hops in [0, 1, 3, 5] {
        let library = build_walk_library(&grid, &paths, hops, None)?;
        let stats = library.stats();
        let largest = stats.per_source.iter().map(|s| s.walks).max().unwrap_or(0);
        println!(
            "H={hops}: {:>6} walks, ~{:>7} bytes, largest source {:>5} of at most {}",
            stats.total_walks,
            stats.estimated_bytes,
            largest,
            walk_count_bound(&grid, hops, grid.priority().len())
        );
    }

    let library = build_walk_library(&grid, &paths, 3, None)?;
    let walk = &library.walks(NodeId(0), NodeId(24))[0];
    println!("\nshortest H=3 walk from 0 to 24 ({} s):", walk.duration as f64 / 1e6);
    println!("  explore {:?}", walk.first_hop());
    println!("  to via  {:?}", walk.second_hop());
    println!("  to goal {:?}", walk.third_hop());
    Ok(())
}
