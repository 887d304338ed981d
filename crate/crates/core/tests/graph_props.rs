mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rabbit_patrol::graph::{all_pairs_shortest_paths, is_strongly_connected, NodeId, PatrolGraph};
use rabbit_patrol::TICKS_PER_SECOND;

use common::{bellman_ford_all_pairs, brute_strongly_connected, random_strong_graph, PathOracle};

fn check_table(g: &PatrolGraph) {
    let spt = all_pairs_shortest_paths(g);
    let oracle = bellman_ford_all_pairs(g);
    for u in g.nodes() {
        for v in g.nodes() {
            assert_eq!(spt.dist(u, v), oracle[u.index()][v.index()], "dist {u}->{v}");
            let path = spt.path(u, v);
            assert_eq!(path[0], u);
            assert_eq!(*path.last().unwrap(), v);
            let sum: u64 = path
                .windows(2)
                .map(|p| g.travel_ticks(p[0], p[1]).expect("path uses graph edges"))
                .sum();
            assert_eq!(sum, spt.dist(u, v));
            for w in g.nodes() {
                assert!(spt.dist(u, w) <= spt.dist(u, v) + spt.dist(v, w));
            }
        }
    }
}

#[test]
fn ten_node_graphs_match_relaxation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let g = random_strong_graph(&mut rng, 10, 0.2);
        check_table(&g);
    }
}

#[test]
fn tie_break_is_lexicographic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let g = random_strong_graph(&mut rng, 7, 0.35);
        let spt = all_pairs_shortest_paths(&g);
        let oracle = PathOracle::new(&g);
        for u in 0..7u32 {
            for v in 0..7u32 {
                let got: Vec<u32> = spt.path(NodeId(u), NodeId(v)).iter().map(|n| n.0).collect();
                assert_eq!(got, oracle.lexmin_path(u, v));
            }
        }
    }
}

#[test]
fn grid_manhattan_distances() {
    let g = PatrolGraph::grid(5, 5, 10.0, &[0], 10.0).unwrap();
    let spt = all_pairs_shortest_paths(&g);
    for u in 0..25u32 {
        for v in 0..25u32 {
            let manhattan = (u / 5).abs_diff(v / 5) + (u % 5).abs_diff(v % 5);
            assert_eq!(spt.dist(NodeId(u), NodeId(v)), manhattan as u64 * TICKS_PER_SECOND);
        }
    }
}

proptest! {
    #[test]
    fn strong_connectivity_agrees_with_dfs_oracle(
        n in 1usize..50,
        edges in proptest::collection::vec((0usize..50, 0usize..50), 0..150),
    ) {
        let mut succ = vec![Vec::new(); n];
        for (a, b) in edges {
            if a < n && b < n && a != b {
                succ[a].push(b);
            }
        }
        prop_assert_eq!(is_strongly_connected(&succ), brute_strongly_connected(&succ));
    }

    #[test]
    fn shortest_paths_round_trip(seed in any::<u64>(), n in 2usize..12, p in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_strong_graph(&mut rng, n, p);
        check_table(&g);
    }
}
