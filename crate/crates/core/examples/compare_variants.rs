//! Puts the four assignment variants in front of the same decision and
//! shows what each one searches and picks.
//!
//! cargo run --example compare_variants

use rabbit_patrol::assignment::{assign_walk, reward, AgentId, IdlenessTable, PolicyState, Variant};
use rabbit_patrol::graph::{all_pairs_shortest_paths, NodeId, PatrolGraph};
use rabbit_patrol::walks::build_walk_library;
use rabbit_patrol::TICKS_PER_SECOND;

fn main() -> rabbit_patrol::Result<()> {
    let grid = PatrolGraph::grid(5, 5, 50.0, &[0, 4, 12, 20, 24], 10.0)?;
    let paths = all_pairs_shortest_paths(&grid);
    let library = build_walk_library(&grid, &paths, 3, None)?;

    // The right-hand column has not been seen for a while.
    let now = 600 * TICKS_PER_SECOND;
    let mut idleness = IdlenessTable::new(grid.node_count());
    for node in grid.nodes() {
        let stale = node.0 % 5 == 4;
        idleness.set_last_visit(node, if stale { 0 } else { 500 * TICKS_PER_SECOND });
    }

    let source = NodeId(0);
    println!("agent at node {source}, t = 600 s\n");
    for variant in Variant::ALL {
        let mut policy = PolicyState::new(variant, grid.priority(), Some(2), 42)?;
        let a = assign_walk(&library, source, &idleness, now, &mut policy, AgentId(0))?;
        debug_assert_eq!(a.reward, reward(&a.walk, &idleness, now));
        println!(
            "{variant:<10} searched {:>5} walks -> target {:>2}, reward {:>6} s, {} nodes",
            a.candidates_searched,
            a.walk.target,
            a.reward / TICKS_PER_SECOND,
            a.walk.nodes.len()
        );
    }

    let mut greedy = PolicyState::new(Variant::Greedy, grid.priority(), None, 0)?;
    let targets: Vec<u32> = (0..7)
        .map(|_| assign_walk(&library, source, &idleness, now, &mut greedy, AgentId(0)).map(|a| a.walk.target.0))
        .collect::<Result<_, _>>()?;
    println!("\ngreedy target rotation: {targets:?}");
    println!("greedy counters:        {:?}", greedy.counters());
    Ok(())
}
