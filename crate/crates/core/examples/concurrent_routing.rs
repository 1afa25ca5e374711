// Many payments routed at once on a small-world network, compared with
// routing them one after another.

use pcn_flow::experiments::{retrying_concurrent_solve, success_fraction, ConcurrentOptions};
use pcn_flow::topology::{generate_network, sample_workload, TopologyConfig, WorkloadConfig};
use pcn_flow::{concurrent_solve, sequential_batch, Amount, Scheduler};

pub fn run_example() -> anyhow::Result<()> {
    let net = generate_network(&TopologyConfig { n: 50, seed: 7, ..TopologyConfig::evaluation() })?;
    let demands = sample_workload(&net, &WorkloadConfig { num_flows: 24, vol_max: Amount::from_units(20), seed: 7 })?;

    let seq = sequential_batch(&net, &demands)?;
    println!("sequential:           {:.3}", success_fraction(&seq.outcomes));

    for (name, scheduler) in [("round robin", Scheduler::RoundRobin), ("random", Scheduler::Random { seed: 1 })] {
        let out = concurrent_solve(&net, &demands, &scheduler)?;
        println!("concurrent {name:<11} {:.3} in {} steps", success_fraction(&out.outcomes), out.steps);
    }

    let retried = retrying_concurrent_solve(&net, &demands, ConcurrentOptions::default())?;
    println!("concurrent + retries: {:.3}, rounds: {}", success_fraction(&retried.outcomes), retried.rounds);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
