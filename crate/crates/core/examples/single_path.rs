// The single-path baseline: route each payment on its widest path or not
// at all.

use pcn_flow::experiments::{single_path_route, widest_path};
use pcn_flow::{example_network, Amount, NodeId};

pub fn run_example() -> anyhow::Result<()> {
    let mut net = example_network();
    let (s, t) = (NodeId(0), NodeId(3));
    if let Some((path, width)) = widest_path(&net, s, t) {
        println!("widest path {path:?} carries {width}");
    }
    for d in [2, 2, 1] {
        let outcome = single_path_route(&mut net, s, t, Amount::from_units(d))?;
        println!("pay {d}: {outcome}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
