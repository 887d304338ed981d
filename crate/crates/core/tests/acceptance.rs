//! Acceptance gate. Run with `cargo test --test acceptance -- --nocapture`
//! to see one line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rabbit_patrol::assignment::{assign_walk, candidate_set, AgentId, IdlenessTable, PolicyState, Variant};
use rabbit_patrol::graph::{all_pairs_shortest_paths, NodeId, PatrolGraph};
use rabbit_patrol::metrics::{aggregate, compute_metrics};
use rabbit_patrol::runner::{
    benchmark_decisions, benchmark_states, run_prepared, run_scenario, run_sweep, write_sweep_csv, write_visit_log,
    MetricsReport, RunOutcome, SweepSpec,
};
use rabbit_patrol::sim::{initialize, EventKind, GraphSource, LogRecord, Scenario, ScenarioConfig};
use rabbit_patrol::walks::{build_walk_library, validate_walk, walk_count_bound, RabbitWalk, WalkLibrary};
use rabbit_patrol::{Ticks, TICKS_PER_SECOND};

use common::{brute_library, random_strong_graph, rescan_max_gaps};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn grid5(priority_count: usize, hops: usize) -> (PatrolGraph, WalkLibrary) {
    let cfg = ScenarioConfig {
        priority: None,
        priority_count: Some(priority_count),
        hops,
        ..ScenarioConfig::grid5(Vec::new())
    };
    let s = Scenario::prepare(&cfg).unwrap();
    ((*s.graph).clone(), (*s.library).clone())
}

fn random_family() -> Vec<PatrolGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..60)
        .map(|i| {
            let n = 2 + i % 7;
            let p = [0.1, 0.25, 0.5][i % 3];
            random_strong_graph(&mut rng, n, p)
        })
        .collect()
}

/// Every run of the default sweep, executed directly so logs stay available.
fn sweep_outcomes() -> Vec<RunOutcome> {
    let spec = SweepSpec::default();
    let mut scenarios = BTreeMap::new();
    for cell in spec.cells() {
        scenarios
            .entry((cell.priority_count, cell.hops))
            .or_insert_with(|| Scenario::prepare(&spec.config_for(&cell)).unwrap());
    }
    spec.cells()
        .par_iter()
        .map(|cell| run_prepared(&scenarios[&(cell.priority_count, cell.hops)], &spec.config_for(cell)).unwrap())
        .collect()
}

fn c1_count_bound() -> Outcome {
    let mut worst = 0.0f64;
    for h in [0, 3, 5] {
        let (g, lib) = grid5(4, h);
        ensure!(g.max_out_degree() == 4, "grid5 max degree is {}", g.max_out_degree());
        let bound = walk_count_bound(&g, h, 4);
        let expected = 4u128.pow(h as u32) * (25 - h as u128 + 1) * 4;
        ensure!(bound == expected, "bound {bound} != {expected}");
        for s in &lib.stats().per_source {
            ensure!(
                (s.walks as u128) <= bound,
                "H={h} source {}: {} > {bound}",
                s.source,
                s.walks
            );
            worst = worst.max(s.walks as f64 / bound as f64);
        }
    }
    Ok(format!("largest per-source fill {:.3} of the bound", worst))
}

fn c2_completeness() -> Outcome {
    let graphs = random_family();
    let mut compared = 0;
    for (i, g) in graphs.iter().enumerate() {
        let spt = all_pairs_shortest_paths(g);
        for h in 0..=2 {
            let lib = build_walk_library(g, &spt, h, None).map_err(|e| e.to_string())?;
            for ((s, t), expected) in brute_library(g, h) {
                let walks = lib.walks(NodeId(s), NodeId(t));
                let got: BTreeSet<Vec<u32>> = walks.iter().map(|w| w.nodes.iter().map(|n| n.0).collect()).collect();
                ensure!(got.len() == walks.len(), "graph {i} H={h} ({s},{t}) stores duplicates");
                ensure!(
                    got == expected,
                    "graph {i} H={h} ({s},{t}): {} vs {} walks",
                    got.len(),
                    expected.len()
                );
                compared += got.len();
            }
        }
    }
    Ok(format!(
        "{} graphs, {compared} walks equal to brute force",
        graphs.len()
    ))
}

fn c3_validity() -> Outcome {
    let mut checked = 0;
    let mut check = |g: &PatrolGraph, h: usize| -> Result<(), String> {
        let spt = all_pairs_shortest_paths(g);
        let lib = build_walk_library(g, &spt, h, None).map_err(|e| e.to_string())?;
        for w in lib.iter() {
            let report = validate_walk(g, &spt, h, w);
            ensure!(report.is_valid(), "{:?}: {:?}", w.nodes, report.violations);
            checked += 1;
        }
        Ok(())
    };
    for k in [4, 5, 6] {
        for h in [0, 3, 5] {
            check(&grid5(k, 0).0, h)?;
        }
    }
    for g in random_family() {
        for h in 0..=3 {
            check(&g, h)?;
        }
    }
    Ok(format!("{checked} walks valid"))
}

fn naive_reward(w: &RabbitWalk, idl: &IdlenessTable, t: Ticks) -> Ticks {
    let distinct: BTreeSet<NodeId> = w.nodes.iter().copied().collect();
    distinct.iter().map(|&n| t - idl.last_visit(n)).sum()
}

fn c4_argmax() -> Outcome {
    let graphs = random_family();
    let libs: Vec<WalkLibrary> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| build_walk_library(g, &all_pairs_shortest_paths(g), i % 3, None).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut case = 0;
    while case < 1000 {
        let i = rng.gen_range(0..graphs.len());
        let (g, lib) = (&graphs[i], &libs[i]);
        let t: Ticks = rng.gen_range(1..8);
        let mut idl = IdlenessTable::new(g.node_count());
        for n in g.nodes() {
            idl.set_last_visit(n, rng.gen_range(0..=t));
        }
        let source = g.priority()[rng.gen_range(0..g.priority().len())];
        let variant = Variant::ALL[case % 4];
        let k = g.priority().len();
        let mut policy = PolicyState::new(variant, g.priority(), Some(rng.gen_range(1..=k)), case as u64).unwrap();
        // tiny graphs can leave a source with no walk of the requested depth
        let Ok(candidates) = candidate_set(lib, source, &mut policy.clone()) else {
            continue;
        };
        let best = candidates
            .walks
            .iter()
            .copied()
            .max_by(|a, b| {
                naive_reward(a, &idl, t)
                    .cmp(&naive_reward(b, &idl, t))
                    .then_with(|| (b.duration, &b.nodes).cmp(&(a.duration, &a.nodes)))
            })
            .unwrap();
        let got = assign_walk(lib, source, &idl, t, &mut policy, AgentId(0)).map_err(|e| e.to_string())?;
        ensure!(
            &got.walk == best,
            "case {case} ({variant}): chose {:?}, scan {:?}",
            got.walk.nodes,
            best.nodes
        );
        ensure!(
            got.reward == naive_reward(best, &idl, t),
            "case {case}: reward mismatch"
        );
        case += 1;
    }
    Ok("1000 instances match the linear scan".into())
}

fn c5_search_sizes(outcomes: &[RunOutcome]) -> Outcome {
    let mut logged = 0;
    for o in outcomes {
        let bound = o.run.policy().search_bound(o.run.graph(), o.config.hops);
        for a in o.run.assignments() {
            ensure!(
                a.candidates_searched as u128 <= bound,
                "{} H={}: searched {} > {bound}",
                a.variant,
                o.config.hops,
                a.candidates_searched
            );
            logged += 1;
        }
    }
    let mut states = 0;
    for h in [0, 3, 5] {
        let (g, lib) = grid5(5, h);
        for (source, idl, t) in benchmark_states(&g, 100, h as u64) {
            let searched: Vec<usize> = Variant::ALL
                .iter()
                .map(|&v| {
                    let mut p = PolicyState::new(v, g.priority(), Some(2), 7).unwrap();
                    assign_walk(&lib, source, &idl, t, &mut p, AgentId(0))
                        .unwrap()
                        .candidates_searched
                })
                .collect();
            ensure!(searched[1..].iter().all(|&s| s <= searched[0]), "H={h}: {searched:?}");
            states += 1;
        }
    }
    Ok(format!(
        "{logged} logged assignments within bounds, exhaustive largest on {states} states"
    ))
}

fn c6_greedy_balance(outcomes: &[RunOutcome]) -> Outcome {
    let mut runs = 0;
    for o in outcomes.iter().filter(|o| o.config.variant == Variant::Greedy) {
        let c = o.run.policy().counters();
        let spread = c.iter().max().unwrap() - c.iter().min().unwrap();
        ensure!(
            spread <= 1,
            "counters {c:?} (seed {}, H={})",
            o.config.seed,
            o.config.hops
        );
        runs += 1;
    }
    Ok(format!("{runs} greedy runs, spread <= 1"))
}

fn c7_finite_visits() -> Outcome {
    let started = Instant::now();
    let spec = SweepSpec::default();
    let report = run_sweep(&spec, 0).map_err(|e| e.to_string())?;
    ensure!(report.failures.is_empty(), "{} failed cells", report.failures.len());
    ensure!(report.rows.len() == 324, "{} rows", report.rows.len());
    let horizon = spec.horizon;
    let mut worst: f64 = 0.0;
    for r in &report.rows {
        ensure!(r.unvisited_nodes == 0, "{} unvisited in {r:?}", r.unvisited_nodes);
        ensure!(
            r.graph_max_idleness_s < horizon,
            "graph max {} in {r:?}",
            r.graph_max_idleness_s
        );
        worst = worst.max(r.graph_max_idleness_s);
    }
    Ok(format!(
        "324 runs, all nodes visited, worst graph max {worst} s < {horizon} s ({:.1} s)",
        started.elapsed().as_secs_f64()
    ))
}

fn arrival(t: Ticks, node: u32) -> LogRecord {
    LogRecord {
        time: t,
        agent: AgentId(0),
        node: NodeId(node),
        walk_id: 0,
        kind: EventKind::Arrival,
    }
}

fn c8_metrics(outcomes: &[RunOutcome]) -> Outcome {
    for o in outcomes {
        let g = o.run.graph();
        let visits: Vec<(Ticks, u32)> = o
            .run
            .log()
            .iter()
            .filter(|r| r.kind == EventKind::Arrival)
            .map(|r| (r.time, r.node.0))
            .collect();
        let rescan = rescan_max_gaps(g.node_count(), &visits, o.run.horizon());
        ensure!(
            compute_metrics(g, o.run.log(), o.run.horizon()) == o.metrics,
            "recomputation differs"
        );
        ensure!(
            o.metrics.per_node_max == rescan,
            "rescan differs (seed {})",
            o.config.seed
        );
        let report = MetricsReport::new(o);
        let ratio = report.idleness_ratio.ok_or("undefined ratio")?;
        let identity = report.graph_max_idleness_s / report.priority_max_idleness_s;
        ensure!(
            ((ratio - identity) / identity).abs() <= 1e-9,
            "ratio {ratio} vs {identity}"
        );
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.json");
    std::fs::write(
        &path,
        r#"{"nodes": [{"id": 0}, {"id": 1}], "edges": [{"from": 0, "to": 1, "length": 1}, {"from": 1, "to": 0, "length": 1}], "priority": [0]}"#,
    )
    .unwrap();
    let g = GraphSource::File(path).document().unwrap().build(1.0).unwrap();
    let s = TICKS_PER_SECOND;
    let log = [arrival(0, 1), arrival(3 * s, 1), arrival(10 * s, 1)];
    let m = compute_metrics(&g, &log, 12 * s);
    ensure!(m.per_node_max[1] == 7 * s, "hand example gave {}", m.per_node_max[1]);
    let rescan = rescan_max_gaps(2, &[(0, 1), (3 * s, 1), (10 * s, 1)], 12 * s);
    ensure!(rescan[1] == 7 * s, "rescan gave {}", rescan[1]);
    Ok(format!(
        "{} runs match the rescan, hand example gap 7 s",
        outcomes.len()
    ))
}

fn c9_determinism() -> Outcome {
    for variant in Variant::ALL {
        let cfg = ScenarioConfig {
            priority: None,
            priority_count: Some(5),
            agents: 3,
            hops: 3,
            variant,
            sample_n: Some(2),
            seed: 17,
            ..ScenarioConfig::grid5(Vec::new())
        };
        let bytes = |o: &RunOutcome| {
            let mut log = Vec::new();
            write_visit_log(&mut log, o.run.log()).unwrap();
            (log, serde_json::to_vec_pretty(&MetricsReport::new(o)).unwrap())
        };
        let a = bytes(&run_scenario(&cfg).map_err(|e| e.to_string())?);
        let b = bytes(&run_scenario(&cfg).map_err(|e| e.to_string())?);
        ensure!(a == b, "{variant}: outputs differ between runs");
    }
    let spec = SweepSpec {
        seeds: vec![1, 2],
        ..SweepSpec::default()
    };
    let csv = |workers| {
        let report = run_sweep(&spec, workers).unwrap();
        let mut out = Vec::new();
        write_sweep_csv(&mut out, &report.rows).unwrap();
        out
    };
    let serial = csv(1);
    ensure!(serial == csv(4), "sweep CSV differs between 1 and 4 workers");
    Ok(format!(
        "visit logs, metrics JSON and a {}-byte sweep CSV identical",
        serial.len()
    ))
}

fn c10_directional() -> Outcome {
    let mut detail = Vec::new();

    for k in [4, 5, 6] {
        let counts: Vec<usize> = [0, 3, 5].iter().map(|&h| grid5(k, h).1.total_walks()).collect();
        ensure!(counts.windows(2).all(|w| w[0] < w[1]), "|S|={k}: {counts:?}");
        detail.push(format!("|S|={k} {counts:?}"));
    }
    let wide = PatrolGraph::grid(4, 6, 50.0, &[0, 5, 18, 23], 10.0).unwrap();
    let spt = all_pairs_shortest_paths(&wide);
    let counts: Vec<usize> = [0, 3, 5]
        .iter()
        .map(|&h| build_walk_library(&wide, &spt, h, None).unwrap().total_walks())
        .collect();
    ensure!(counts.windows(2).all(|w| w[0] < w[1]), "4x6 grid: {counts:?}");

    let median = |hops| -> f64 {
        let values: Vec<f64> = (1..=10)
            .into_par_iter()
            .map(|seed| {
                let cfg = ScenarioConfig {
                    priority: None,
                    priority_count: Some(4),
                    agents: 2,
                    hops,
                    seed,
                    ..ScenarioConfig::grid5(Vec::new())
                };
                run_scenario(&cfg).unwrap().metrics.graph_max_idleness()
            })
            .collect();
        aggregate(&values).unwrap().median
    };
    let (m0, m5) = (median(0), median(5));
    ensure!(m5 <= m0, "greedy median graph max H=5 {m5} > H=0 {m0}");
    detail.push(format!("median graph max H0 {m0} s, H5 {m5} s"));

    let (g, lib) = grid5(4, 3);
    let states = benchmark_states(&g, 200, 1);
    let t = benchmark_decisions(&g, &lib, &[Variant::Exhaustive, Variant::Greedy], &states, 1)
        .map_err(|e| e.to_string())?;
    ensure!(
        t[0].mean_micros > t[1].mean_micros,
        "exhaustive {:.1} us <= greedy {:.1} us",
        t[0].mean_micros,
        t[1].mean_micros
    );
    detail.push(format!(
        "decision {:.1} us vs {:.1} us",
        t[0].mean_micros, t[1].mean_micros
    ));
    Ok(detail.join("; "))
}

fn c11_trace() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("triangle.json");
    std::fs::write(
        &path,
        r#"{"nodes": [{"id": 0}, {"id": 1}, {"id": 2}],
            "edges": [{"from": 0, "to": 1, "length": 10}, {"from": 1, "to": 2, "length": 10},
                      {"from": 2, "to": 0, "length": 10}], "priority": [0]}"#,
    )
    .unwrap();
    let cfg = ScenarioConfig {
        graph: GraphSource::File(path),
        start_nodes: Some(vec![0]),
        horizon: 10.0,
        ..ScenarioConfig::grid5(vec![0])
    };
    let mut run = initialize(&cfg).map_err(|e| e.to_string())?;
    run.run_to_horizon().map_err(|e| e.to_string())?;
    let s = TICKS_PER_SECOND;
    let expected = [
        (0, 0, 0, EventKind::Arrival),
        (0, 0, 1, EventKind::Assignment),
        (s, 1, 1, EventKind::Arrival),
        (2 * s, 2, 1, EventKind::Arrival),
        (3 * s, 0, 1, EventKind::Arrival),
        (3 * s, 0, 2, EventKind::Assignment),
    ];
    let got: Vec<_> = run
        .log()
        .iter()
        .take(6)
        .map(|r| (r.time, r.node.0, r.walk_id, r.kind))
        .collect();
    ensure!(got == expected, "trace {got:?}");
    ensure!(run.log().iter().all(|r| r.agent == AgentId(0)), "unexpected agent");
    let rewards: Vec<Ticks> = run.assignments().iter().take(2).map(|a| a.reward).collect();
    ensure!(rewards == [0, 3 * s], "rewards {rewards:?}");
    Ok("first 6 events match".into())
}

#[test]
fn acceptance() {
    println!();
    let started = Instant::now();
    let outcomes = sweep_outcomes();
    let criteria: Vec<Criterion> = vec![
        ("C1 walk count bound", Box::new(c1_count_bound)),
        ("C2 generator completeness", Box::new(c2_completeness)),
        ("C3 walk validity", Box::new(c3_validity)),
        ("C4 argmax oracle", Box::new(c4_argmax)),
        ("C5 search sizes", Box::new(|| c5_search_sizes(&outcomes))),
        ("C6 greedy balance", Box::new(|| c6_greedy_balance(&outcomes))),
        ("C7 finite visits", Box::new(c7_finite_visits)),
        ("C8 metrics oracle", Box::new(|| c8_metrics(&outcomes))),
        ("C9 determinism", Box::new(c9_determinism)),
        ("C10 directional claims", Box::new(c10_directional)),
        ("C11 trace", Box::new(c11_trace)),
    ];
    let mut failed = Vec::new();
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                println!("[FAIL] {name}: {why}");
                failed.push(*name);
            }
        }
    }
    println!("{} criteria, {:.1} s", criteria.len(), started.elapsed().as_secs_f64());
    assert!(failed.is_empty(), "failed: {failed:?}");
}
