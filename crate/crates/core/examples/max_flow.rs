// Maximum flow on the four-node example network.

use pcn_flow::{example_network, max_flow, NodeId};

pub fn run_example() -> anyhow::Result<()> {
    let net = example_network();
    let (flow, value) = max_flow(&net);
    println!("max flow {} -> {}: {value}", net.source(), net.sink());
    for e in net.edges() {
        println!("  {} -> {}  {} / {}", e.from, e.to, flow.flow(&net, e.from, e.to), e.capacity);
    }
    anyhow::ensure!(value.milli() == 4000);
    anyhow::ensure!(flow.excess(NodeId(3)) == value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
