// Why concurrent flows need locks: without them a second payment can
// spend the reverse capacity created by the first one.

use pcn_flow::locking::CommodityId;
use pcn_flow::{Amount, ChannelEdge, Demand, FlowNetwork, MultiCommodityState, NodeId};

pub fn run_example() -> anyhow::Result<()> {
    let units = Amount::from_units;
    // u -> v (3), v -> t (1)
    let net = FlowNetwork::new(3, [ChannelEdge::new(0, 1, units(3)), ChannelEdge::new(1, 2, units(1))], NodeId(0), NodeId(2))?;
    let (u, v) = (NodeId(0), NodeId(1));
    let (first, second) = (CommodityId(0), CommodityId(1));
    let mut state = MultiCommodityState::new(&net, &[Demand::new(0, 2, units(2)), Demand::new(1, 0, units(2))])?;

    state.relabel_commodity(first, u)?;
    let moved = state.locked_push(first, u, v)?;
    println!("commodity {first} pushed {moved} over u -> v, locking L(u,v) = {}", state.total_locked(u, v));

    println!("v -> u for commodity {first}: {}", state.residual_capacity_locked(first, v, u)?);
    println!("v -> u for commodity {second}: {} locked, {} unlocked",
        state.residual_capacity_locked(second, v, u)?,
        state.residual_capacity_unlocked(second, v, u)?);

    state.relabel_commodity(second, v)?;
    match state.locked_push(second, v, u) {
        Ok(m) => println!("unexpected push of {m}"),
        Err(e) => println!("locked push refused: {e}"),
    }
    state.check_invariants()?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
