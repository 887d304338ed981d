use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rabbit_patrol::assignment::Variant;
use rabbit_patrol::graph::all_pairs_shortest_paths;
use rabbit_patrol::runner::{self, SweepSpec};
use rabbit_patrol::sim::{resolve_graph, GraphSource, ScenarioConfig, DEFAULT_SPEED};
use rabbit_patrol::{Error, Result};

#[derive(Parser)]
#[command(name = "rabbit-patrol", version, about = "Priority patrolling with Rabbit Walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its artifacts.
    Run(RunArgs),
    /// Run the Cartesian product of scenario settings.
    Sweep(SweepArgs),
    /// Report walk-library size, memory and decision time for several H.
    Libstats(LibstatsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario file; flags override its fields.
    #[arg(long, env = "RABBIT_PATROL_CONFIG")]
    config: Option<PathBuf>,
    /// `grid5` or a graph document path.
    #[arg(long, env = "RABBIT_PATROL_GRAPH")]
    graph: Option<GraphSource>,
    #[arg(long, env = "RABBIT_PATROL_PRIORITY", value_delimiter = ',')]
    priority: Option<Vec<u32>>,
    #[arg(long, env = "RABBIT_PATROL_PRIORITY_COUNT")]
    priority_count: Option<usize>,
    #[arg(long, env = "RABBIT_PATROL_AGENTS")]
    agents: Option<usize>,
    #[arg(long, env = "RABBIT_PATROL_START_NODES", value_delimiter = ',')]
    start_nodes: Option<Vec<u32>>,
    #[arg(long, env = "RABBIT_PATROL_HOPS")]
    hops: Option<usize>,
    #[arg(long, env = "RABBIT_PATROL_VARIANT")]
    variant: Option<Variant>,
    #[arg(long, env = "RABBIT_PATROL_SAMPLE_N")]
    sample_n: Option<usize>,
    /// Meters per second.
    #[arg(long, env = "RABBIT_PATROL_SPEED")]
    speed: Option<f64>,
    /// Seconds.
    #[arg(long, env = "RABBIT_PATROL_HORIZON")]
    horizon: Option<f64>,
    #[arg(long, env = "RABBIT_PATROL_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "RABBIT_PATROL_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long, env = "RABBIT_PATROL_LIB_CACHE")]
    lib_cache: Option<PathBuf>,
    #[arg(long, env = "RABBIT_PATROL_MEM_CAP")]
    mem_cap: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep spec; flags override its fields.
    #[arg(long, env = "RABBIT_PATROL_SPEC")]
    spec: Option<PathBuf>,
    #[arg(long = "graph", env = "RABBIT_PATROL_GRAPH", value_delimiter = ',')]
    graphs: Option<Vec<GraphSource>>,
    #[arg(long, env = "RABBIT_PATROL_PRIORITY_COUNTS", value_delimiter = ',')]
    priority_counts: Option<Vec<usize>>,
    #[arg(long = "agents", env = "RABBIT_PATROL_AGENTS", value_delimiter = ',')]
    agent_counts: Option<Vec<usize>>,
    #[arg(long, env = "RABBIT_PATROL_HOPS", value_delimiter = ',')]
    hops: Option<Vec<usize>>,
    #[arg(long, env = "RABBIT_PATROL_VARIANTS", value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    #[arg(long, env = "RABBIT_PATROL_SEEDS", value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, env = "RABBIT_PATROL_SAMPLE_N")]
    sample_n: Option<usize>,
    #[arg(long, env = "RABBIT_PATROL_SPEED")]
    speed: Option<f64>,
    #[arg(long, env = "RABBIT_PATROL_HORIZON")]
    horizon: Option<f64>,
    #[arg(long, env = "RABBIT_PATROL_OUT", default_value = "sweep.csv")]
    out: PathBuf,
    /// Parallel runs; 0 uses every core.
    #[arg(long, env = "RABBIT_PATROL_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long, env = "RABBIT_PATROL_LIB_CACHE")]
    lib_cache: Option<PathBuf>,
    #[arg(long, env = "RABBIT_PATROL_MEM_CAP")]
    mem_cap: Option<u64>,
}

#[derive(Args)]
struct LibstatsArgs {
    #[arg(long, env = "RABBIT_PATROL_GRAPH", default_value = "grid5")]
    graph: GraphSource,
    #[arg(long, env = "RABBIT_PATROL_PRIORITY", value_delimiter = ',')]
    priority: Option<Vec<u32>>,
    #[arg(long, env = "RABBIT_PATROL_PRIORITY_COUNT")]
    priority_count: Option<usize>,
    #[arg(long, env = "RABBIT_PATROL_HOPS", value_delimiter = ',', default_value = "0,3,5")]
    hops: Vec<usize>,
    #[arg(long, env = "RABBIT_PATROL_SPEED", default_value_t = DEFAULT_SPEED)]
    speed: f64,
    /// assign_walk calls per variant in the timing benchmark.
    #[arg(long, env = "RABBIT_PATROL_BENCH_CALLS", default_value_t = 200)]
    bench_calls: usize,
    #[arg(long, env = "RABBIT_PATROL_MEM_CAP")]
    mem_cap: Option<u64>,
    /// Also write the report as JSON.
    #[arg(long, env = "RABBIT_PATROL_OUT")]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => read_json(path)?,
        None => ScenarioConfig {
            graph: args
                .graph
                .clone()
                .ok_or_else(|| Error::Config("--graph or --config is required".into()))?,
            priority: None,
            priority_count: None,
            agents: 1,
            start_nodes: None,
            hops: 0,
            variant: Variant::Greedy,
            sample_n: None,
            seed: 0,
            speed: DEFAULT_SPEED,
            horizon: 20_000.0,
            mem_cap: None,
            lib_cache: None,
        },
    };
    if let Some(v) = args.graph {
        config.graph = v;
    }
    if let Some(v) = args.priority {
        config.priority = Some(v);
    }
    if let Some(v) = args.priority_count {
        config.priority_count = Some(v);
    }
    if let Some(v) = args.agents {
        config.agents = v;
    }
    if let Some(v) = args.start_nodes {
        config.start_nodes = Some(v);
    }
    if let Some(v) = args.hops {
        config.hops = v;
    }
    if let Some(v) = args.variant {
        config.variant = v;
    }
    if let Some(v) = args.sample_n {
        config.sample_n = Some(v);
    }
    if let Some(v) = args.speed {
        config.speed = v;
    }
    if let Some(v) = args.horizon {
        config.horizon = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.lib_cache {
        config.lib_cache = Some(v);
    }
    if let Some(v) = args.mem_cap {
        config.mem_cap = Some(v);
    }

    let outcome = runner::run_scenario(&config)?;
    runner::write_artifacts(&outcome, &args.out)?;
    let m = &outcome.metrics;
    println!("priority_max_idleness_s {:.6}", m.priority_max_idleness());
    println!("graph_max_idleness_s {:.6}", m.graph_max_idleness());
    match m.idleness_ratio() {
        Some(r) => println!("idleness_ratio {r:.6}"),
        None => println!("idleness_ratio undefined"),
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<bool> {
    let mut spec: SweepSpec = match &args.spec {
        Some(path) => read_json(path)?,
        None => SweepSpec::default(),
    };
    if let Some(v) = args.graphs {
        spec.graphs = v;
    }
    if let Some(v) = args.priority_counts {
        spec.priority_counts = v;
    }
    if let Some(v) = args.agent_counts {
        spec.agent_counts = v;
    }
    if let Some(v) = args.hops {
        spec.hops = v;
    }
    if let Some(v) = args.variants {
        spec.variants = v;
    }
    if let Some(v) = args.seeds {
        spec.seeds = v;
    }
    if let Some(v) = args.sample_n {
        spec.sample_n = v;
    }
    if let Some(v) = args.speed {
        spec.speed = v;
    }
    if let Some(v) = args.horizon {
        spec.horizon = v;
    }
    if let Some(v) = args.lib_cache {
        spec.lib_cache = Some(v);
    }
    if let Some(v) = args.mem_cap {
        spec.mem_cap = Some(v);
    }

    let report = runner::run_sweep(&spec, args.workers)?;
    let file = std::fs::File::create(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    runner::write_sweep_csv(std::io::BufWriter::new(file), &report.rows)?;
    println!("{} runs written to {}", report.rows.len(), args.out.display());
    for f in &report.failures {
        eprintln!(
            "failed: graph={} |S|={} agents={} H={} variant={} seed={}: {}",
            f.cell.graph, f.cell.priority_count, f.cell.agents, f.cell.hops, f.cell.variant, f.cell.seed, f.error
        );
    }
    Ok(report.failures.is_empty())
}

fn cmd_libstats(args: LibstatsArgs) -> Result<()> {
    let mut config = ScenarioConfig::grid5(Vec::new());
    config.graph = args.graph;
    config.priority = args.priority;
    config.priority_count = args.priority_count;
    config.speed = args.speed;
    if config.priority.is_none() && config.priority_count.is_none() && config.graph == GraphSource::Grid5 {
        config.priority_count = Some(4);
    }
    let (graph, _) = resolve_graph(&config)?;
    let paths = all_pairs_shortest_paths(&graph);
    let rows = runner::library_report(&graph, &paths, &args.hops, args.mem_cap, args.bench_calls)?;

    println!("H\twalks\tbytes\tbuild_ms\tdecision_us (exhaustive/sampled/random/greedy)");
    for row in &rows {
        let timings: Vec<String> = row.decisions.iter().map(|d| format!("{:.1}", d.mean_micros)).collect();
        println!(
            "{}\t{}\t{}\t{:.1}\t{}",
            row.hops,
            row.total_walks,
            row.estimated_bytes,
            row.build_millis,
            timings.join("/")
        );
    }
    if let Some(out) = args.out {
        let file = std::fs::File::create(&out).map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;
        serde_json::to_writer_pretty(file, &rows)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args).map(|()| true),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Libstats(args) => cmd_libstats(args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
