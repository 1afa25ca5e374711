// Routing payments one at a time; each success consumes capacity.

use pcn_flow::{example_network, sequential_batch, Amount, Demand, NodeId};

pub fn run_example() -> anyhow::Result<()> {
    let net = example_network();
    let demands = [
        Demand::new(0, 3, Amount::from_units(2)),
        Demand::new(0, 3, Amount::from_units(2)),
        Demand::new(0, 3, Amount::from_units(1)),
        Demand::new(1, 3, Amount::from_milli(500)),
    ];
    let batch = sequential_batch(&net, &demands)?;
    for (d, outcome) in demands.iter().zip(&batch.outcomes) {
        println!("{} -> {} ({}): {outcome}", d.source, d.sink, d.amount);
    }
    let into_sink = batch.residual.capacity(NodeId(1), NodeId(3)) + batch.residual.capacity(NodeId(2), NodeId(3));
    println!("capacity left into the sink: {into_sink}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
