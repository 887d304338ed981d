//! Runs a small parameter sweep and prints box-plot summaries per setting.
//!
//! cargo run --release --example sweep_summary

use rabbit_patrol::assignment::Variant;
use rabbit_patrol::runner::{run_sweep, summarize_sweep, write_sweep_csv, SweepSpec};

fn main() -> rabbit_patrol::Result<()> {
    let spec = SweepSpec {
        priority_counts: vec![4],
        agent_counts: vec![2, 4],
        hops: vec![0, 3],
        variants: vec![Variant::Exhaustive, Variant::Greedy],
        seeds: (1..=5).collect(),
        ..SweepSpec::default()
    };
    println!("{} runs", spec.run_count());
    let report = run_sweep(&spec, 0)?;
    for f in &report.failures {
        eprintln!("{:?}: {}", f.cell, f.error);
    }

    println!("\nagents  H  variant     graph max idleness (s): min / q1 / median / q3 / max");
    for cell in summarize_sweep(&report.rows)? {
        let s = &cell.graph_max_idleness_s;
        println!(
            "{:>6} {:>2}  {:<10}  {:>5.0} / {:>5.0} / {:>6.0} / {:>5.0} / {:>5.0}",
            cell.key.agents, cell.key.hops, cell.key.variant, s.min, s.q1, s.median, s.q3, s.max
        );
    }

    let path = std::env::temp_dir().join("rabbit-patrol-sweep.csv");
    write_sweep_csv(
        std::fs::File::create(&path).map_err(|e| rabbit_patrol::Error::io(&path, e))?,
        &report.rows,
    )?;
    println!("\nrows written to {}", path.display());
    Ok(())
}
