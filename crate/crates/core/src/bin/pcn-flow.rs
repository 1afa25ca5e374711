use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use pcn_flow::experiments::{write_experiment, ExperimentConfig};
use pcn_flow::locking::ReplayOp;
use pcn_flow::push_relabel::FeasibleFlow;
use pcn_flow::sim::{run_simulation, write_trace, LatencyModel, SimConfig, DEFAULT_MAX_DELAY};
use pcn_flow::topology::{generate_network, sample_workload, TopologyConfig, WorkloadConfig};
use pcn_flow::{feasible_flow, max_flow, Amount, ConcurrentSolver, Demand, FlowNetwork, Scheduler};

#[derive(Parser)]
#[command(name = "pcn-flow", version, about = "Push-relabel routing for payment channel networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Watts-Strogatz network and optionally a workload.
    Gen {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Maximum channel capacity in units.
        #[arg(long, default_value = "10")]
        cap_max: Amount,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Graph JSON destination; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also sample this many demands into `--workload-out`.
        #[arg(long, requires = "workload_out")]
        flows: Option<usize>,
        /// Maximum demand volume in units.
        #[arg(long, default_value = "20")]
        vol_max: Amount,
        #[arg(long)]
        workload_out: Option<PathBuf>,
    },
    /// Maximum flow between the graph's source and sink.
    Maxflow { graph: PathBuf },
    /// Whether `demand` units can be routed from source to sink.
    Feasible {
        graph: PathBuf,
        #[arg(long)]
        demand: Amount,
    },
    /// Route a workload concurrently with capacity locking.
    Simulate {
        graph: PathBuf,
        /// JSON list of `{"source", "sink", "demand_milli"}` records.
        #[arg(long)]
        workload: PathBuf,
        /// Run the message-passing protocol instead of the centralised solver.
        #[arg(long)]
        distributed: bool,
        /// Write delivered messages (or applied operations) as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Upper bound of the uniform message delay; 0 delivers instantly.
        #[arg(long, default_value_t = DEFAULT_MAX_DELAY)]
        max_delay: u64,
    },
    /// Run a success-rate sweep and write its CSV summary.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { n, k, beta, cap_max, seed, out, flows, vol_max, workload_out } => {
            let net = generate_network(&TopologyConfig { n, k, beta, cap_max, seed })?;
            match out {
                Some(path) => net.save(&path).with_context(|| format!("writing {}", path.display()))?,
                None => println!("{}", net.to_json()),
            }
            if let (Some(num_flows), Some(path)) = (flows, workload_out) {
                let demands = sample_workload(&net, &WorkloadConfig { num_flows, vol_max, seed })?;
                fs::write(&path, serde_json::to_string_pretty(&demands)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Maxflow { graph } => {
            let net = load_graph(&graph)?;
            let (_, value) = max_flow(&net);
            println!("{}", json!({ "value": value.to_string(), "value_milli": value.milli() }));
        }
        Command::Feasible { graph, demand } => {
            if demand.is_negative() {
                bail!("demand must be non-negative");
            }
            let net = load_graph(&graph)?;
            let report = match feasible_flow(&net, demand)? {
                FeasibleFlow::Success(_) => json!({ "feasible": true, "demand": demand.to_string() }),
                FeasibleFlow::Infeasible { max_deliverable } => json!({
                    "feasible": false,
                    "demand": demand.to_string(),
                    "max_deliverable": max_deliverable.to_string(),
                }),
            };
            println!("{report}");
        }
        Command::Simulate { graph, workload, distributed, trace, seed, max_delay } => {
            let net = load_graph(&graph)?;
            let text = fs::read_to_string(&workload).with_context(|| format!("reading {}", workload.display()))?;
            let demands: Vec<Demand> = serde_json::from_str(&text).context("parsing workload")?;
            let report = if distributed {
                let latency = if max_delay == 0 { LatencyModel::Zero } else { LatencyModel::Uniform { max_delay } };
                let cfg = SimConfig { latency, seed: seed.unwrap_or(0), record_trace: trace.is_some(), ..SimConfig::default() };
                let out = run_simulation(&net, &demands, &cfg)?;
                if let Some(path) = &trace {
                    let mut w = BufWriter::new(File::create(path)?);
                    write_trace(&out.trace, &mut w)?;
                    w.flush()?;
                }
                json!({
                    "mode": "distributed",
                    "successes": out.successes(),
                    "flows": demands.len(),
                    "outcomes": out.outcomes,
                    "messages": out.messages,
                    "end_time": out.end_time,
                })
            } else {
                let scheduler = seed.map_or(Scheduler::RoundRobin, |seed| Scheduler::Random { seed });
                let mut ops: Vec<ReplayOp> = Vec::new();
                let record = trace.is_some();
                let out = ConcurrentSolver::new(&net, &demands)?.solve_with(&scheduler, |_, op| {
                    if record {
                        ops.push(*op);
                    }
                })?;
                if let Some(path) = &trace {
                    let mut w = BufWriter::new(File::create(path)?);
                    for op in &ops {
                        serde_json::to_writer(&mut w, op)?;
                        w.write_all(b"\n")?;
                    }
                    w.flush()?;
                }
                json!({
                    "mode": "centralized",
                    "successes": out.successes(),
                    "flows": demands.len(),
                    "outcomes": out.outcomes,
                    "steps": out.steps,
                })
            };
            println!("{report}");
        }
        Command::Experiment { config, out } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let path = write_experiment(&cfg, &out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn load_graph(path: &PathBuf) -> Result<FlowNetwork> {
    FlowNetwork::load(path).with_context(|| format!("loading {}", path.display()))
}
