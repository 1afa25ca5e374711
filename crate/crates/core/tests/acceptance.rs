//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. The full-scale sweeps take several minutes.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use pcn_flow::experiments::{
    emit_csv, run_experiment, single_path_route, ExperimentConfig, Sweep, SummaryRow,
};
use pcn_flow::locking::CommodityId;
use pcn_flow::push_relabel::FeasibleFlow;
use pcn_flow::sim::{run_simulation, LatencyModel, SimConfig};
use pcn_flow::topology::{generate_network, sample_workload, TopologyConfig, WorkloadConfig};
use pcn_flow::{
    example_network, feasible_flow, max_flow, Amount, ChannelEdge, ConcurrentSolver, Demand, FlowNetwork,
    MultiCommodityState, NodeId, Outcome, Scheduler,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

type Verdict = Result<String, String>;

struct Run {
    failed: usize,
}

impl Run {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Verdict) {
        self.check_within(name, Duration::MAX, f)
    }

    fn check_within(&mut self, name: &str, limit: Duration, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let verdict = verdict.and_then(|detail| {
            ensure(elapsed <= limit, || format!("{detail}; exceeded the {}s limit", limit.as_secs()))?;
            Ok(detail)
        });
        let secs = elapsed.as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn example_network_exactness() -> Verdict {
    let net = example_network();
    let (_, value) = max_flow(&net);
    ensure(value == Amount::from_units(4), || format!("max flow {value}"))?;
    for milli in 0..=4000 {
        let d = Amount::from_milli(milli);
        ensure(matches!(feasible_flow(&net, d).unwrap(), FeasibleFlow::Success(_)), || format!("{d} infeasible"))?;
    }
    let over = feasible_flow(&net, Amount::from_milli(4001)).unwrap();
    ensure(over == FeasibleFlow::Infeasible { max_deliverable: Amount::from_units(4) }, || format!("4.001 gave {over:?}"))?;
    Ok("max flow 4, feasible for all 4001 demands 0..=4, infeasible at 4.001".into())
}

fn oracle_equivalence() -> Verdict {
    let mut mismatches = Vec::new();
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density = rng.gen_range(0.1..0.8);
        let net = random_network(&mut rng, 12, density, 10);
        let (_, value) = max_flow(&net);
        let oracle = oracle_max_flow(&net);
        if value != oracle {
            mismatches.push(format!("seed {seed}: {value} vs {oracle}"));
        }
    }
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok("500/500 instances equal Edmonds-Karp".into())
}

fn invariant_suite() -> Verdict {
    let mut ops = 0u64;
    let mut violations = Vec::new();
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + seed);
        let net = random_channel_network(&mut rng, 3, 30, 10);
        let demands = random_demands(&mut rng, net.node_count(), 8, 12);
        let out = ConcurrentSolver::new(&net, &demands).unwrap().solve_with(&Scheduler::Random { seed }, |state, op| {
            ops += 1;
            if let Err(v) = state.check_invariants() {
                violations.push(format!("seed {seed} after {op:?}: {v}"));
            }
        });
        if let Err(e) = out {
            violations.push(format!("seed {seed}: {e}"));
        }
    }
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok(format!("200 scenarios, {ops} operations, zero violations"))
}

fn capacity_stealing() -> Verdict {
    let u = Amount::from_units;
    let net = FlowNetwork::new(3, [ChannelEdge::new(0, 1, u(3)), ChannelEdge::new(1, 2, u(1))], NodeId(0), NodeId(2))
        .unwrap();
    let (a, b) = (NodeId(0), NodeId(1));
    let (c1, c2) = (CommodityId(0), CommodityId(1));
    let mut state = MultiCommodityState::new(&net, &[Demand::new(0, 2, u(2)), Demand::new(1, 0, u(2))]).unwrap();
    state.relabel_commodity(c1, a).unwrap();
    ensure(state.locked_push(c1, a, b).unwrap() == u(2), || "setup push".into())?;
    let locked = state.residual_capacity_locked(c2, b, a).unwrap();
    let unlocked = state.residual_capacity_unlocked(c2, b, a).unwrap();
    ensure(locked.is_zero() && unlocked == u(2), || format!("locked {locked}, unlocked {unlocked}"))?;
    state.relabel_commodity(c2, b).map_err(|e| e.to_string())?;
    let heights = state.commodity(c2).unwrap().heights();
    ensure(heights.get(b) > heights.get(a), || "v not above u".into())?;
    let refused = state.locked_push(c2, b, a);
    ensure(refused.is_err(), || format!("locked push moved {refused:?}"))?;
    ensure(state.residual_capacity_locked(c1, b, a).unwrap() == u(2), || "owner lost its reverse capacity".into())?;
    Ok("v above u, 2 units unlocked but 0 locked; locked push refused".into())
}

fn distributed_agreement() -> Verdict {
    let mut messages = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5_000 + seed);
        let net = random_channel_network(&mut rng, 3, 14, 10);
        let demands = random_demands(&mut rng, net.node_count(), 5, 12);

        let zero = SimConfig { check_invariants: true, ..SimConfig::zero_latency() };
        let sim = run_simulation(&net, &demands, &zero).map_err(|e| format!("seed {seed}: {e}"))?;
        let central = ConcurrentSolver::new(&net, &demands)
            .unwrap()
            .solve(&Scheduler::Replay(sim.replay.clone()))
            .map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(central.outcomes == sim.outcomes, || {
            format!("seed {seed}: distributed {:?} vs centralised {:?}", sim.outcomes, central.outcomes)
        })?;

        let random = SimConfig {
            latency: LatencyModel::Uniform { max_delay: 10 },
            seed,
            check_invariants: true,
            ..SimConfig::default()
        };
        // run() checks channel agreement at quiescence
        let sim = run_simulation(&net, &demands, &random).map_err(|e| format!("seed {seed} (random latency): {e}"))?;
        messages += sim.messages;
    }
    Ok(format!("100/100 zero-latency runs agree; invariants held over {messages} random-latency events"))
}

fn mean(rows: &[SummaryRow], level: f64, f: impl Fn(&SummaryRow) -> Option<f64>) -> f64 {
    rows.iter().find(|r| r.level == level).and_then(f).expect("level present")
}

/// Means never rise by more than the two confidence half-widths plus 0.02
/// once success has dropped below 1.
fn monotone_after_saturation(rows: &[SummaryRow], name: &str, f: impl Fn(&SummaryRow) -> (f64, f64)) -> Result<(), String> {
    let Some(start) = rows.iter().position(|r| f(r).0 < 1.0) else {
        return Ok(());
    };
    for i in start..rows.len() {
        for j in i + 1..rows.len() {
            let ((mi, ci), (mj, cj)) = (f(&rows[i]), f(&rows[j]));
            ensure(mj <= mi + ci + cj + 0.02, || {
                format!("{name}: {mj:.3} at {} above {mi:.3} at {}", rows[j].level, rows[i].level)
            })?;
        }
    }
    Ok(())
}

fn shape(rows: &[SummaryRow], sweep: &str) -> Result<(), String> {
    monotone_after_saturation(rows, &format!("{sweep} seq"), |r| (r.seq_success.unwrap(), r.ci_seq.unwrap()))?;
    monotone_after_saturation(rows, &format!("{sweep} conc"), |r| (r.conc_success.unwrap(), r.ci_conc.unwrap()))
}

fn save(rows: &[SummaryRow], cfg: &ExperimentConfig, name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    emit_csv(rows, cfg.sweep.level_column(), &path).unwrap();
    path
}

fn flow_levels(cfg: &ExperimentConfig) -> Vec<usize> {
    match &cfg.sweep {
        Sweep::FlowCount { levels, .. } => levels.clone(),
        _ => unreachable!(),
    }
}

fn single_demands_above_ten_fail() -> Verdict {
    let mut checked = 0;
    for seed in 0..10u64 {
        let net = generate_network(&TopologyConfig { seed, ..TopologyConfig::evaluation() }).unwrap();
        let demands = sample_workload(&net, &WorkloadConfig { num_flows: 128, vol_max: Amount::from_units(20), seed }).unwrap();
        for d in demands.iter().filter(|d| d.amount > Amount::from_units(10)) {
            let mut fresh = net.clone();
            let outcome = single_path_route(&mut fresh, d.source, d.sink, d.amount).unwrap();
            ensure(!outcome.is_success(), || format!("{} -> {} routed {} on one path", d.source, d.sink, d.amount))?;
            checked += 1;
        }
        let mut fresh = net.clone();
        let edge = net.edges().max_by_key(|e| e.capacity).unwrap();
        let just_over = edge.capacity + Amount::from_milli(1);
        let o = single_path_route(&mut fresh, edge.from, edge.to, just_over).unwrap();
        ensure(o != Outcome::Success, || format!("{just_over} over a single channel"))?;
    }
    Ok(format!("{checked} demands above 10 all failed on fresh networks"))
}

fn main() {
    let mut run = Run { failed: 0 };
    run.check("example network exactness", example_network_exactness);
    run.check_within("oracle equivalence", Duration::from_secs(10), oracle_equivalence);
    run.check_within("locking invariant suite", Duration::from_secs(60), invariant_suite);
    run.check("capacity-stealing regression", capacity_stealing);
    run.check_within("distributed/centralised agreement", Duration::from_secs(120), distributed_agreement);

    let desk_start = Instant::now();
    let desk_flow_cfg = ExperimentConfig::desk_flow_sweep();
    let desk_flow = run_experiment(&desk_flow_cfg).expect("desk flow sweep");
    let desk_volume_cfg = ExperimentConfig::desk_volume_sweep();
    let desk_volume = run_experiment(&desk_volume_cfg).expect("desk volume sweep");
    let desk_time = desk_start.elapsed();
    save(&desk_flow, &desk_flow_cfg, "desk_flow_sweep.csv");
    save(&desk_volume, &desk_volume_cfg, "desk_volume_sweep.csv");
    run.check("reproduction desk-scale ordering", || {
        ensure(desk_time < Duration::from_secs(120), || format!("took {desk_time:?}"))?;
        // 256 flows on 200 nodes corresponds to 64 on 50
        for r in desk_flow.iter().filter(|r| r.level <= 64.0) {
            let (seq, conc, sp) = (r.seq_success.unwrap(), r.conc_success.unwrap(), r.single_path_success.unwrap());
            ensure(seq > 0.5 && conc > 0.5 && seq > sp && conc > sp, || {
                format!("{} flows: seq {seq:.3} conc {conc:.3} sp {sp:.3}", r.level)
            })?;
        }
        let conc15 = mean(&desk_volume, 15.0, |r| r.conc_success);
        ensure(conc15 >= 0.35, || format!("conc at volume 15: {conc15:.3}"))?;
        shape(&desk_flow, "desk flow")?;
        shape(&desk_volume, "desk volume")?;
        Ok(format!("{:.1}s; seq, conc > 0.5 and > single path up to 64 flows; conc {conc15:.3} at volume 15", desk_time.as_secs_f64()))
    });

    let full_start = Instant::now();
    let flow_cfg = ExperimentConfig::evaluation_flow_sweep();
    let flow = run_experiment(&flow_cfg).expect("flow sweep");
    let volume_cfg = ExperimentConfig::evaluation_volume_sweep();
    let volume = run_experiment(&volume_cfg).expect("volume sweep");
    let full_time = full_start.elapsed();
    let flow_csv = save(&flow, &flow_cfg, "flow_sweep.csv");
    save(&volume, &volume_cfg, "volume_sweep.csv");
    println!("full-scale CSVs in {}", flow_csv.parent().unwrap().display());

    run.check("reproduction (a) seq and conc above 0.5 up to 256 flows", || {
        let mut worst = (1.0f64, 1.0f64);
        for level in flow_levels(&flow_cfg).into_iter().filter(|&l| l <= 256) {
            let seq = mean(&flow, level as f64, |r| r.seq_success);
            let conc = mean(&flow, level as f64, |r| r.conc_success);
            ensure(seq > 0.5 && conc > 0.5, || format!("{level} flows: seq {seq:.3} conc {conc:.3}"))?;
            worst = (worst.0.min(seq), worst.1.min(conc));
        }
        Ok(format!("lowest seq {:.3}, lowest conc {:.3}", worst.0, worst.1))
    });
    run.check("reproduction (a) single path at vol_max 20 in [0.35, 0.55]", || {
        let sp = mean(&flow, 128.0, |r| r.single_path_success);
        let sp_volume = mean(&volume, 20.0, |r| r.single_path_success);
        ensure((0.35..=0.55).contains(&sp), || format!("128 flows: {sp:.3}"))?;
        Ok(format!("{sp:.3} at 128 flows in the flow sweep ({sp_volume:.3} at volume 20 in the volume sweep)"))
    });
    run.check("reproduction (b) conc at volume 15 with 128 flows >= 0.35", || {
        let conc = mean(&volume, 15.0, |r| r.conc_success);
        ensure(conc >= 0.35, || format!("{conc:.3}"))?;
        Ok(format!("{conc:.3}"))
    });
    run.check("reproduction (c) single demands above 10 fail on one path", single_demands_above_ten_fail);
    run.check("reproduction shape: non-increasing beyond saturation", || {
        shape(&flow, "flow")?;
        shape(&volume, "volume")?;
        Ok("seq and conc in both sweeps".into())
    });
    run.check("reproduction full-scale runtime under 30 min", || {
        ensure(full_time < Duration::from_secs(1800), || format!("{full_time:?}"))?;
        Ok(format!("{:.0}s", full_time.as_secs_f64()))
    });

    run.check("determinism of experiment CSVs", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = ExperimentConfig::desk_flow_sweep();
        std::fs::write(dir.path().join("exp.json"), cfg.to_json()).map_err(|e| e.to_string())?;
        for out in ["a", "b"] {
            let status = Command::new(env!("CARGO_BIN_EXE_pcn-flow"))
                .args(["experiment", "--config", "exp.json", "--out", out])
                .current_dir(dir.path())
                .stdout(Stdio::null())
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), || format!("experiment exited with {status}"))?;
        }
        let a = std::fs::read(dir.path().join("a/flow_sweep.csv")).map_err(|e| e.to_string())?;
        let b = std::fs::read(dir.path().join("b/flow_sweep.csv")).map_err(|e| e.to_string())?;
        ensure(a == b, || "CSVs differ".into())?;
        Ok(format!("two runs produced identical {}-byte CSVs", a.len()))
    });

    if run.failed > 0 {
        println!("{} criteria failed", run.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
