macro_rules! example {
    ($name:ident, $file:literal) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(max_flow, "max_flow.rs");
example!(feasible_flow, "feasible_flow.rs");
example!(sequential_batch, "sequential_batch.rs");
example!(capacity_locking, "capacity_locking.rs");
example!(concurrent_routing, "concurrent_routing.rs");
example!(distributed_sim, "distributed_sim.rs");
example!(topology, "topology.rs");
example!(single_path, "single_path.rs");

#[test]
fn examples_run() {
    max_flow::run_example().unwrap();
    feasible_flow::run_example().unwrap();
    sequential_batch::run_example().unwrap();
    capacity_locking::run_example().unwrap();
    concurrent_routing::run_example().unwrap();
    distributed_sim::run_example().unwrap();
    topology::run_example().unwrap();
    single_path::run_example().unwrap();
}
