// The message-passing protocol with random delays, checked against the
// centralised solver replaying the same operations.

use pcn_flow::sim::{run_simulation, write_trace, LatencyModel, SimConfig};
use pcn_flow::topology::{generate_network, sample_workload, TopologyConfig, WorkloadConfig};
use pcn_flow::{Amount, ConcurrentSolver, Scheduler};

pub fn run_example() -> anyhow::Result<()> {
    let net = generate_network(&TopologyConfig { n: 20, k: 4, beta: 0.3, cap_max: Amount::from_units(10), seed: 5 })?;
    let demands = sample_workload(&net, &WorkloadConfig { num_flows: 6, vol_max: Amount::from_units(15), seed: 5 })?;

    let cfg = SimConfig {
        latency: LatencyModel::Uniform { max_delay: 10 },
        seed: 42,
        check_invariants: true,
        record_trace: true,
        ..SimConfig::default()
    };
    let sim = run_simulation(&net, &demands, &cfg)?;
    println!("{} messages, quiescent at t = {}", sim.messages, sim.end_time);
    for (i, (outcome, decision)) in sim.outcomes.iter().zip(&sim.decisions).enumerate() {
        let decided = decision.map_or("undecided".to_string(), |d| d.to_string());
        println!("  #{i}: {outcome} (source: {decided})");
    }

    let central = ConcurrentSolver::new(&net, &demands)?.solve(&Scheduler::Replay(sim.replay.clone()))?;
    anyhow::ensure!(central.outcomes == sim.outcomes, "replay disagrees");
    println!("replaying {} operations centrally gives the same outcomes", sim.replay.len());

    let path = std::env::temp_dir().join("pcn_flow_trace.jsonl");
    write_trace(&sim.trace, std::fs::File::create(&path)?)?;
    println!("trace written to {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
