// A reduced success-rate sweep written as CSV.
//
// Pass `--full` for the 200-node flow-count sweep (long).

use pcn_flow::experiments::{write_experiment, ExperimentConfig};

pub fn run_example() -> anyhow::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let mut cfg = if full { ExperimentConfig::evaluation_flow_sweep() } else { ExperimentConfig::desk_volume_sweep() };
    if !full {
        cfg.runs = 3;
    }
    let out = std::env::temp_dir().join("pcn_flow_sweep");
    let path = write_experiment(&cfg, &out)?;
    print!("{}", std::fs::read_to_string(&path)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
