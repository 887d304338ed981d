use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabbit-patrol"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--graph",
            "grid5",
            "--priority-count",
            "4",
            "--agents",
            "2",
            "--hops",
            "3",
            "--horizon",
            "500",
            "--seed",
            "3",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("graph_max_idleness_s"));
    for f in ["visit_log.csv", "assignments.csv", "metrics.json", "library_stats.json"] {
        assert!(dir.path().join("res").join(f).is_file(), "{f} missing");
    }
    let log = std::fs::read_to_string(dir.path().join("res/visit_log.csv")).unwrap();
    assert!(log.starts_with("time_s,agent_id,node_id,walk_id,event_kind\n"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res/metrics.json")).unwrap()).unwrap();
    assert!(metrics["graph_max_idleness_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_graph_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--graph",
            "no/such/graph.json",
            "--priority",
            "0",
            "--horizon",
            "10",
        ],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no/such/graph.json"), "{}", stderr(&o));
}

#[test]
fn sampled_without_n_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--graph",
            "grid5",
            "--priority",
            "0,24",
            "--variant",
            "sampled",
            "--horizon",
            "10",
        ],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sample"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["run", "--graph", "grid5", "--variant", "best"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn single_cell_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, workers: &'static str| {
        vec![
            "sweep",
            "--priority-counts",
            "4",
            "--agents",
            "2",
            "--hops",
            "3",
            "--variants",
            "greedy",
            "--seeds",
            "1,2,3",
            "--horizon",
            "600",
            "--workers",
            workers,
            "--out",
            out,
        ]
    };
    let a = cli(&args("a.csv", "1"), dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    let b = cli(&args("b.csv", "3"), dir.path());
    assert!(b.status.success(), "{}", stderr(&b));
    let x = std::fs::read(dir.path().join("a.csv")).unwrap();
    let y = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(x, y);
    let rows = String::from_utf8(x).unwrap().lines().count();
    assert_eq!(rows, 1 + 3);
}

#[test]
fn libstats_single_depth() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &["libstats", "--hops", "0", "--bench-calls", "5", "--out", "lib.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lib.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["hops"], 0);
    assert!(rows[0]["total_walks"].as_u64().unwrap() > 0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("scenario.json"),
        r#"{"graph": "grid5", "priority": [0, 24], "agents": 1, "hops": 0, "variant": "exhaustive", "horizon": 100}"#,
    )
    .unwrap();
    let o = cli(
        &["run", "--config", "scenario.json", "--horizon", "50", "--out", "r"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["horizon_s"].as_f64().unwrap(), 50.0);
}
