// Small-world evaluation networks and random payment workloads.

use pcn_flow::topology::{assign_capacities, sample_workload, watts_strogatz, TopologyConfig, WorkloadConfig};
use pcn_flow::Amount;

pub fn run_example() -> anyhow::Result<()> {
    let cfg = TopologyConfig { seed: 1, ..TopologyConfig::evaluation() };
    let skeleton = watts_strogatz(&cfg)?;
    let degrees = skeleton.degrees();
    println!(
        "n = {}, edges = {}, degree {}..{}, connected: {}",
        skeleton.node_count(),
        skeleton.edge_count(),
        degrees.iter().min().unwrap_or(&0),
        degrees.iter().max().unwrap_or(&0),
        skeleton.is_connected()
    );

    let net = assign_capacities(&skeleton, cfg.cap_max, 99)?;
    let total: Amount = net.edges().map(|e| e.capacity).sum();
    println!("{} directed channels, mean capacity {:.3}", net.edge_count(), total.to_units_f64() / net.edge_count() as f64);

    let demands = sample_workload(&net, &WorkloadConfig { num_flows: 5, vol_max: Amount::from_units(20), seed: 3 })?;
    for d in &demands {
        println!("  {} -> {}: {}", d.source, d.sink, d.amount);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
