// Feasibility of single payments between the terminals.

use pcn_flow::push_relabel::FeasibleFlow;
use pcn_flow::{example_network, feasible_flow, Amount};

pub fn run_example() -> anyhow::Result<()> {
    let net = example_network();
    for demand in ["1", "4", "4.001"] {
        let d: Amount = demand.parse()?;
        match feasible_flow(&net, d)? {
            FeasibleFlow::Success(flow) => println!("{d}: feasible, value {}", flow.value(&net)),
            FeasibleFlow::Infeasible { max_deliverable } => println!("{d}: infeasible, at most {max_deliverable}"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
