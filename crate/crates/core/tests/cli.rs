use std::path::Path;
use std::process::{Command, Output};

use pcn_flow::experiments::{parse_summary_csv, ExperimentConfig};
use pcn_flow::{example_network, max_flow, FlowNetwork};
use serde_json::Value;

fn pcn_flow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcn-flow")).args(args).current_dir(dir).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn maxflow_and_feasible_on_the_example_graph() {
    let dir = tempfile::tempdir().unwrap();
    example_network().save(dir.path().join("g.json")).unwrap();
    let v = json_stdout(&pcn_flow(&["maxflow", "g.json"], dir.path()));
    assert_eq!(v["value_milli"], 4000);
    let v = json_stdout(&pcn_flow(&["feasible", "g.json", "--demand", "4"], dir.path()));
    assert_eq!(v["feasible"], true);
    let v = json_stdout(&pcn_flow(&["feasible", "g.json", "--demand", "4.001"], dir.path()));
    assert_eq!(v["feasible"], false);
    assert_eq!(v["max_deliverable"], "4");
}

#[test]
fn gen_then_simulate_both_ways() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--n", "30", "--k", "4", "--seed", "5", "--out", "g.json", "--flows", "6", "--workload-out", "w.json"];
    assert!(pcn_flow(&args, dir.path()).status.success());
    let net = FlowNetwork::load(dir.path().join("g.json")).unwrap();
    assert_eq!(net.node_count(), 30);
    let v = json_stdout(&pcn_flow(&["maxflow", "g.json"], dir.path()));
    assert_eq!(v["value_milli"], max_flow(&net).1.milli());

    let v = json_stdout(&pcn_flow(&["simulate", "g.json", "--workload", "w.json", "--trace", "ops.jsonl"], dir.path()));
    assert_eq!(v["mode"], "centralized");
    assert_eq!(v["flows"], 6);
    assert!(std::fs::read_to_string(dir.path().join("ops.jsonl")).unwrap().lines().count() > 0);

    let sim = ["simulate", "g.json", "--workload", "w.json", "--distributed", "--seed", "3", "--trace", "t.jsonl"];
    let first = json_stdout(&pcn_flow(&sim, dir.path()));
    let trace = std::fs::read(dir.path().join("t.jsonl")).unwrap();
    let second = json_stdout(&pcn_flow(&sim, dir.path()));
    assert_eq!(first, second);
    assert_eq!(trace, std::fs::read(dir.path().join("t.jsonl")).unwrap());
    assert_eq!(first["mode"], "distributed");
    let lines = String::from_utf8(trace).unwrap().lines().count() as u64;
    assert_eq!(Some(lines), first["messages"].as_u64());

    let zero = ["simulate", "g.json", "--workload", "w.json", "--distributed", "--max-delay", "0"];
    assert!(pcn_flow(&zero, dir.path()).status.success());
}

#[test]
fn experiment_writes_a_parsable_csv_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk_flow_sweep();
    cfg.runs = 2;
    if let pcn_flow::experiments::Sweep::FlowCount { levels, .. } = &mut cfg.sweep {
        levels.truncate(4);
    }
    std::fs::write(dir.path().join("exp.json"), cfg.to_json()).unwrap();
    for out in ["a", "b"] {
        assert!(pcn_flow(&["experiment", "--config", "exp.json", "--out", out], dir.path()).status.success());
    }
    let a = std::fs::read_to_string(dir.path().join("a/flow_sweep.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(dir.path().join("b/flow_sweep.csv")).unwrap());
    let (column, rows) = parse_summary_csv(&a).unwrap();
    assert_eq!(column, "r");
    assert_eq!(rows.len(), 4);
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!pcn_flow(&["maxflow", "missing.json"], dir.path()).status.success());
    std::fs::write(dir.path().join("bad.json"), r#"{"runs": 1}"#).unwrap();
    assert!(!pcn_flow(&["experiment", "--config", "bad.json", "--out", "o"], dir.path()).status.success());
    example_network().save(dir.path().join("g.json")).unwrap();
    assert!(!pcn_flow(&["feasible", "g.json", "--demand", "-1"], dir.path()).status.success());
    assert!(!pcn_flow(&["feasible", "g.json", "--demand", "abc"], dir.path()).status.success());
    std::fs::write(dir.path().join("w.json"), r#"[{"source": 0, "sink": 0, "demand_milli": 5}]"#).unwrap();
    assert!(!pcn_flow(&["simulate", "g.json", "--workload", "w.json"], dir.path()).status.success());
}
