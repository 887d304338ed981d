//! Steps a three-agent simulation on the 5x5 grid event by event, then
//! writes the usual run artifacts.
//!
//! cargo run --example simulate_grid5 [out-dir]

use std::path::PathBuf;

use rabbit_patrol::assignment::Variant;
use rabbit_patrol::format_seconds;
use rabbit_patrol::runner::{write_artifacts, RunOutcome};
use rabbit_patrol::sim::{initialize, ScenarioConfig};

fn main() -> rabbit_patrol::Result<()> {
    env_logger::init();
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rabbit-patrol-grid5"));

    let config = ScenarioConfig {
        priority: None,
        priority_count: Some(5),
        agents: 3,
        hops: 3,
        variant: Variant::Greedy,
        seed: 7,
        ..ScenarioConfig::grid5(Vec::new())
    };
    let mut run = initialize(&config)?;
    println!(
        "agents start at {:?}, priority {:?}",
        run.start_nodes(),
        run.graph().priority()
    );

    let mut shown = 0;
    while let Some(step) = run.step()? {
        if let Some(a) = step.assignment.filter(|_| shown < 8) {
            println!(
                "{:>11} s  agent {} at {:>2} takes walk {:>2} to {:>2} ({} candidates, reward {} s)",
                format_seconds(a.time),
                a.agent,
                a.source,
                a.walk_id,
                a.target,
                a.candidates_searched,
                format_seconds(a.reward)
            );
            shown += 1;
        }
    }
    run.run_to_horizon()?;

    let metrics = run.metrics();
    println!(
        "\n{} arrivals, {} assignments; priority max {} s, graph max {} s",
        run.log().len() - run.assignments().len(),
        run.assignments().len(),
        metrics.priority_max_idleness(),
        metrics.graph_max_idleness()
    );
    let outcome = RunOutcome { config, run, metrics };
    for path in write_artifacts(&outcome, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
