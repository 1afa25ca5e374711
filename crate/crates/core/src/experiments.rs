//! Success-rate sweeps comparing sequential routing, concurrent routing
//! with capacity locking, and a single-path baseline on generated
//! small-world networks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::{ExperimentError, LockingError, NetworkError};
use crate::flow::{Demand, Outcome};
use crate::locking::{ConcurrentSolver, Scheduler};
use crate::network::{FlowNetwork, NodeId};
use crate::push_relabel::sequential_batch;
use crate::topology::{generate_network, sample_workload, TopologyConfig, WorkloadConfig};

/// How the concurrent mode runs on top of the plain locked solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcurrentOptions {
    /// Periodic raise-only global relabeling per commodity.
    pub global_relabel: bool,
    /// Re-run failed commodities on the residual network left by the
    /// successful ones until a round adds no success.
    pub retry_failed: bool,
}

impl Default for ConcurrentOptions {
    fn default() -> Self {
        ConcurrentOptions { global_relabel: true, retry_failed: true }
    }
}

impl ConcurrentOptions {
    /// One round of the unmodified solver.
    pub fn plain() -> Self {
        ConcurrentOptions { global_relabel: false, retry_failed: false }
    }
}

fn default_vol_max() -> Amount {
    Amount::from_units(20)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sweep {
    /// Varies the number of flows; demands uniform on `[0, vol_max]`.
    FlowCount {
        levels: Vec<usize>,
        #[serde(default = "default_vol_max", rename = "vol_max_milli")]
        vol_max: Amount,
    },
    /// Varies `vol_max` at a fixed number of flows.
    Volume {
        fixed_k: usize,
        #[serde(rename = "levels_milli")]
        levels: Vec<Amount>,
    },
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::FlowCount { levels, .. } => levels.len(),
            Sweep::Volume { levels, .. } => levels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric level for reporting: a flow count or a volume in units.
    pub fn level(&self, index: usize) -> f64 {
        match self {
            Sweep::FlowCount { levels, .. } => levels[index] as f64,
            Sweep::Volume { levels, .. } => levels[index].to_units_f64(),
        }
    }

    pub fn workload(&self, index: usize, seed: u64) -> WorkloadConfig {
        match self {
            Sweep::FlowCount { levels, vol_max } => WorkloadConfig { num_flows: levels[index], vol_max: *vol_max, seed },
            Sweep::Volume { fixed_k, levels } => WorkloadConfig { num_flows: *fixed_k, vol_max: levels[index], seed },
        }
    }

    /// Name of the level column in CSV output.
    pub fn level_column(&self) -> &'static str {
        match self {
            Sweep::FlowCount { .. } => "r",
            Sweep::Volume { .. } => "max_demand",
        }
    }

    pub fn file_name(&self) -> &'static str {
        match self {
            Sweep::FlowCount { .. } => "flow_sweep.csv",
            Sweep::Volume { .. } => "volume_sweep.csv",
        }
    }

    fn increasing(&self) -> bool {
        match self {
            Sweep::FlowCount { levels, .. } => levels.windows(2).all(|w| w[0] < w[1]),
            Sweep::Volume { levels, .. } => levels.windows(2).all(|w| w[0] < w[1]),
        }
    }
}

fn yes() -> bool {
    true
}

/// A full sweep. `topology.seed` is ignored: every (level, run) gets its
/// own network seeded from `master_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologyConfig,
    pub sweep: Sweep,
    pub runs: usize,
    #[serde(default = "yes")]
    pub run_sequential: bool,
    #[serde(default = "yes")]
    pub run_concurrent: bool,
    #[serde(default = "yes")]
    pub run_single_path: bool,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub concurrent: ConcurrentOptions,
}

impl ExperimentConfig {
    fn base(topology: TopologyConfig, sweep: Sweep) -> Self {
        ExperimentConfig {
            topology,
            sweep,
            runs: 10,
            run_sequential: true,
            run_concurrent: true,
            run_single_path: true,
            master_seed: 1,
            concurrent: ConcurrentOptions::default(),
        }
    }

    /// n = 200, flow counts 1, 2, 4, ..., 4096, volumes up to 20.
    pub fn evaluation_flow_sweep() -> Self {
        let levels = (0..=12).map(|e| 1usize << e).collect();
        Self::base(TopologyConfig::evaluation(), Sweep::FlowCount { levels, vol_max: default_vol_max() })
    }

    /// n = 200, 128 flows, maximum volume 5, 10, ..., 50.
    pub fn evaluation_volume_sweep() -> Self {
        let levels = (1..=10).map(|v| Amount::from_units(5 * v)).collect();
        Self::base(TopologyConfig::evaluation(), Sweep::Volume { fixed_k: 128, levels })
    }

    /// n = 50, flow counts 1, 2, 4, ..., 512.
    pub fn desk_flow_sweep() -> Self {
        let levels = (0..=9).map(|e| 1usize << e).collect();
        Self::base(desk_topology(), Sweep::FlowCount { levels, vol_max: default_vol_max() })
    }

    /// n = 50, 32 flows, maximum volume 5, 10, ..., 50.
    pub fn desk_volume_sweep() -> Self {
        let levels = (1..=10).map(|v| Amount::from_units(5 * v)).collect();
        Self::base(desk_topology(), Sweep::Volume { fixed_k: 32, levels })
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.topology.validate()?;
        if self.runs == 0 {
            return Err(ExperimentError::Config("runs must be at least 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(ExperimentError::Config("sweep has no levels".into()));
        }
        if !self.sweep.increasing() {
            return Err(ExperimentError::Config("sweep levels must be strictly increasing".into()));
        }
        if let Sweep::Volume { levels, .. } = &self.sweep {
            if levels.iter().any(|l| l.is_negative()) {
                return Err(ExperimentError::Config("volume levels must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> Modes {
        Modes {
            sequential: self.run_sequential,
            concurrent: self.run_concurrent,
            single_path: self.run_single_path,
            concurrent_options: self.concurrent,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn desk_topology() -> TopologyConfig {
    TopologyConfig { n: 50, ..TopologyConfig::evaluation() }
}

/// Which routing modes [`run_level`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modes {
    pub sequential: bool,
    pub concurrent: bool,
    pub single_path: bool,
    pub concurrent_options: ConcurrentOptions,
}

impl Default for Modes {
    fn default() -> Self {
        Modes { sequential: true, concurrent: true, single_path: true, concurrent_options: ConcurrentOptions::default() }
    }
}

/// Success fractions of one workload; `None` for disabled modes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevelOutcome {
    pub sequential: Option<f64>,
    pub concurrent: Option<f64>,
    pub single_path: Option<f64>,
}

/// Share of successful outcomes; an empty workload counts as 1.
pub fn success_fraction(outcomes: &[Outcome]) -> f64 {
    if outcomes.is_empty() {
        return 1.0;
    }
    outcomes.iter().filter(|o| o.is_success()).count() as f64 / outcomes.len() as f64
}

pub fn run_level(net: &FlowNetwork, workload: &[Demand], modes: &Modes) -> Result<LevelOutcome, ExperimentError> {
    let mut result = LevelOutcome::default();
    if modes.sequential {
        result.sequential = Some(success_fraction(&sequential_batch(net, workload)?.outcomes));
    }
    if modes.concurrent {
        let run = retrying_concurrent_solve(net, workload, modes.concurrent_options)?;
        result.concurrent = Some(success_fraction(&run.outcomes));
    }
    if modes.single_path {
        result.single_path = Some(success_fraction(&single_path_batch(net, workload)?));
    }
    Ok(result)
}

#[derive(Clone, Debug)]
pub struct RetryOutcome {
    pub outcomes: Vec<Outcome>,
    pub rounds: usize,
    /// Network after settling every successful commodity.
    pub residual: FlowNetwork,
}

/// Concurrent routing of all demands with the round-robin scheduler. With
/// `retry_failed`, each round is a complete locked run; its failed
/// commodities are rolled back and routed again, concurrently, on the
/// residual network of the successes until a round adds no success.
pub fn retrying_concurrent_solve(
    net: &FlowNetwork,
    demands: &[Demand],
    options: ConcurrentOptions,
) -> Result<RetryOutcome, LockingError> {
    let mut outcomes: Vec<Outcome> = demands.iter().map(|_| Outcome::Infeasible(Amount::ZERO)).collect();
    let mut pending: Vec<usize> = (0..demands.len()).collect();
    let mut residual = net.clone();
    let mut rounds = 0;
    while !pending.is_empty() {
        rounds += 1;
        let batch: Vec<Demand> = pending.iter().map(|&i| demands[i]).collect();
        let run = ConcurrentSolver::new(&residual, &batch)?
            .with_global_relabel(options.global_relabel)
            .solve(&Scheduler::RoundRobin)?;
        residual = run.state.residual_network();
        let mut failed = Vec::new();
        for (&i, outcome) in pending.iter().zip(run.outcomes) {
            if !outcome.is_success() {
                failed.push(i);
            }
            outcomes[i] = outcome;
        }
        let progressed = failed.len() < pending.len();
        pending = failed;
        if !options.retry_failed || !progressed {
            break;
        }
    }
    Ok(RetryOutcome { outcomes, rounds, residual })
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Widest {
    bottleneck: Amount,
    node: NodeId,
}

impl Ord for Widest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bottleneck.cmp(&other.bottleneck).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Widest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Maximum-bottleneck path from `s` to `t` over edges of positive capacity,
/// with its bottleneck. A node's predecessor changes only on strict
/// improvement.
pub fn widest_path(net: &FlowNetwork, s: NodeId, t: NodeId) -> Option<(Vec<NodeId>, Amount)> {
    let n = net.node_count();
    let mut best = vec![Amount::ZERO; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    best[s.0] = Amount::MAX;
    let mut heap = BinaryHeap::from([Widest { bottleneck: Amount::MAX, node: s }]);
    while let Some(Widest { bottleneck, node: u }) = heap.pop() {
        if done[u.0] {
            continue;
        }
        done[u.0] = true;
        if u == t {
            break;
        }
        for a in net.adjacent(u) {
            let through = bottleneck.min(net.pair_capacity(a.pair, a.forward));
            if !done[a.node.0] && through > best[a.node.0] {
                best[a.node.0] = through;
                parent[a.node.0] = Some(u);
                heap.push(Widest { bottleneck: through, node: a.node });
            }
        }
    }
    if s == t || parent[t.0].is_none() {
        return None;
    }
    let mut path = vec![t];
    let mut at = t;
    while let Some(p) = parent[at.0] {
        path.push(p);
        at = p;
    }
    path.reverse();
    Some((path, best[t.0]))
}

/// Routes `d` on the widest `s`-`t` path if its bottleneck allows, settling
/// the payment on the path. Otherwise reports the widest bottleneck.
pub fn single_path_route(net: &mut FlowNetwork, s: NodeId, t: NodeId, d: Amount) -> Result<Outcome, NetworkError> {
    for node in [s, t] {
        if node.0 >= net.node_count() {
            return Err(NetworkError::InvalidNode { node, nodes: net.node_count() });
        }
    }
    if s == t {
        return Err(NetworkError::SourceIsSink(s));
    }
    if d.is_negative() {
        return Err(NetworkError::NegativeDemand(d));
    }
    if d.is_zero() {
        return Ok(Outcome::Success);
    }
    match widest_path(net, s, t) {
        Some((path, bottleneck)) if bottleneck >= d => {
            net.settle_path(&path, d)?;
            Ok(Outcome::Success)
        }
        Some((_, bottleneck)) => Ok(Outcome::Infeasible(bottleneck)),
        None => Ok(Outcome::Infeasible(Amount::ZERO)),
    }
}

/// [`single_path_route`] for each demand in order on a shared network.
pub fn single_path_batch(net: &FlowNetwork, demands: &[Demand]) -> Result<Vec<Outcome>, NetworkError> {
    let mut residual = net.clone();
    demands.iter().map(|d| single_path_route(&mut residual, d.source, d.sink, d.amount)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub level: f64,
    pub seq_success: Option<f64>,
    pub conc_success: Option<f64>,
    pub single_path_success: Option<f64>,
    pub ci_seq: Option<f64>,
    pub ci_conc: Option<f64>,
    pub ci_sp: Option<f64>,
}

/// Mean and half-width of the normal-approximation 95% interval,
/// `1.96 * s / sqrt(runs)` with the sample standard deviation `s`. A single
/// sample has half-width 0.
pub fn mean_ci(samples: &[f64]) -> (f64, f64) {
    assert!(!samples.is_empty(), "need at least one sample");
    if samples.iter().all(|&x| x == samples[0]) {
        return (samples[0], 0.0);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

/// One row per level from per-run outcomes (`runs[level][run]`).
pub fn summarize(levels: &[f64], runs: &[Vec<LevelOutcome>]) -> Vec<SummaryRow> {
    assert_eq!(levels.len(), runs.len());
    levels
        .iter()
        .zip(runs)
        .map(|(&level, outcomes)| {
            let stat = |pick: fn(&LevelOutcome) -> Option<f64>| {
                let samples: Option<Vec<f64>> = outcomes.iter().map(pick).collect();
                samples.filter(|s| !s.is_empty()).map(|s| mean_ci(&s))
            };
            let seq = stat(|o| o.sequential);
            let conc = stat(|o| o.concurrent);
            let sp = stat(|o| o.single_path);
            SummaryRow {
                level,
                seq_success: seq.map(|s| s.0),
                conc_success: conc.map(|s| s.0),
                single_path_success: sp.map(|s| s.0),
                ci_seq: seq.map(|s| s.1),
                ci_conc: conc.map(|s| s.1),
                ci_sp: sp.map(|s| s.1),
            }
        })
        .collect()
}

const VALUE_COLUMNS: [&str; 6] = ["seq_suc", "conc_suc", "sp_suc", "ci_seq", "ci_conc", "ci_sp"];

fn cell(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// Writes `rows` as CSV with `level_column` (`r` or `max_demand`) first and
/// four decimals per value. Disabled modes leave empty cells.
pub fn emit_csv(rows: &[SummaryRow], level_column: &str, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_path(path)?;
    let mut header = vec![level_column];
    header.extend(VALUE_COLUMNS);
    out.write_record(&header)?;
    for row in rows {
        out.write_record([
            row.level.to_string(),
            cell(row.seq_success),
            cell(row.conc_success),
            cell(row.single_path_success),
            cell(row.ci_seq),
            cell(row.ci_conc),
            cell(row.ci_sp),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Parses and checks a CSV written by [`emit_csv`]: known header, success
/// means in `[0, 1]`, non-negative intervals. Returns the level column
/// name and the rows.
pub fn parse_summary_csv(text: &str) -> Result<(String, Vec<SummaryRow>), ExperimentError> {
    let bad = |msg: String| ExperimentError::Config(format!("summary csv: {msg}"));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let level_column = header.get(0).unwrap_or_default().to_string();
    if !["r", "max_demand"].contains(&level_column.as_str()) || header.iter().skip(1).ne(VALUE_COLUMNS) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| -> Result<Option<f64>, ExperimentError> {
            let field = record.get(i).unwrap_or_default();
            if field.is_empty() {
                return Ok(None);
            }
            field.parse().map(Some).map_err(|_| bad(format!("not a number: {field:?}")))
        };
        let level = num(0)?.ok_or_else(|| bad("missing level".into()))?;
        let row = SummaryRow {
            level,
            seq_success: num(1)?,
            conc_success: num(2)?,
            single_path_success: num(3)?,
            ci_seq: num(4)?,
            ci_conc: num(5)?,
            ci_sp: num(6)?,
        };
        let means = [row.seq_success, row.conc_success, row.single_path_success];
        if means.iter().flatten().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(bad(format!("success rate outside [0, 1] at level {level}")));
        }
        if [row.ci_seq, row.ci_conc, row.ci_sp].iter().flatten().any(|c| *c < 0.0) {
            return Err(bad(format!("negative interval at level {level}")));
        }
        rows.push(row);
    }
    Ok((level_column, rows))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for one (level, run, stream) coordinate of a sweep.
pub fn derive_seed(master_seed: u64, level: usize, run: usize, stream: u64) -> u64 {
    [level as u64, run as u64, stream].iter().fold(splitmix64(master_seed), |acc, &x| splitmix64(acc ^ x))
}

/// Outcome of one (level, run) cell on a freshly generated network.
pub fn run_cell(config: &ExperimentConfig, level: usize, run: usize) -> Result<LevelOutcome, ExperimentError> {
    let topology = TopologyConfig { seed: derive_seed(config.master_seed, level, run, 0), ..config.topology.clone() };
    let net = generate_network(&topology)?;
    let workload = sample_workload(&net, &config.sweep.workload(level, derive_seed(config.master_seed, level, run, 1)))?;
    run_level(&net, &workload, &config.modes())
}

/// Runs every (level, run) cell, in parallel, and summarizes per level.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<SummaryRow>, ExperimentError> {
    config.validate()?;
    let cells: Vec<(usize, usize)> =
        (0..config.sweep.len()).flat_map(|level| (0..config.runs).map(move |run| (level, run))).collect();
    let outcomes: Vec<LevelOutcome> =
        cells.par_iter().map(|&(level, run)| run_cell(config, level, run)).collect::<Result<_, _>>()?;
    let per_level: Vec<Vec<LevelOutcome>> = outcomes.chunks(config.runs).map(<[LevelOutcome]>::to_vec).collect();
    let levels: Vec<f64> = (0..config.sweep.len()).map(|i| config.sweep.level(i)).collect();
    Ok(summarize(&levels, &per_level))
}

/// Runs the sweep and writes its CSV into `out_dir`, returning the file.
pub fn write_experiment(config: &ExperimentConfig, out_dir: impl AsRef<Path>) -> Result<PathBuf, ExperimentError> {
    let rows = run_experiment(config)?;
    fs::create_dir_all(&out_dir)?;
    let path = out_dir.as_ref().join(config.sweep.file_name());
    emit_csv(&rows, config.sweep.level_column(), &path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::example_network;
    use crate::push_relabel::max_flow;

    fn units(x: i64) -> Amount {
        Amount::from_units(x)
    }

    #[test]
    fn widest_path_on_example() {
        let net = example_network();
        let (path, width) = widest_path(&net, NodeId(0), NodeId(3)).unwrap();
        assert_eq!(width, units(2));
        assert_eq!(path, vec![NodeId(0), NodeId(2), NodeId(3)]);
    }

    #[test]
    fn single_path_route_examples() {
        let mut net = example_network();
        assert_eq!(single_path_route(&mut net, NodeId(0), NodeId(3), units(3)).unwrap(), Outcome::Infeasible(units(2)));
        assert_eq!(net, example_network());

        assert_eq!(single_path_route(&mut net, NodeId(0), NodeId(3), units(2)).unwrap(), Outcome::Success);
        assert_eq!(net.capacity(NodeId(0), NodeId(2)), Amount::ZERO);
        assert_eq!(net.capacity(NodeId(2), NodeId(3)), units(1));
        assert_eq!(net.capacity(NodeId(3), NodeId(2)), units(2));

        let before = net.clone();
        assert_eq!(single_path_route(&mut net, NodeId(0), NodeId(3), Amount::ZERO).unwrap(), Outcome::Success);
        assert_eq!(net, before);
    }

    #[test]
    fn demands_above_every_capacity_fail_on_one_path() {
        let net = crate::topology::generate_network(&TopologyConfig::evaluation()).unwrap();
        let demands: Vec<Demand> =
            (0..20).map(|i| Demand::new(i, (i + 7) % 200, Amount::from_milli(10_001 + i as i64))).collect();
        let outcomes = single_path_batch(&net, &demands).unwrap();
        assert!(outcomes.iter().all(|o| !o.is_success()));
        let level = run_level(&net, &demands, &Modes::default()).unwrap();
        assert_eq!(level.single_path, Some(0.0));
    }

    #[test]
    fn one_feasible_commodity_succeeds_in_both_solvers() {
        let net = example_network();
        let (_, value) = max_flow(&net);
        for d in [Amount::from_milli(1), units(2), value] {
            let level = run_level(&net, &[Demand::new(0, 3, d)], &Modes::default()).unwrap();
            assert_eq!(level.sequential, Some(1.0));
            assert_eq!(level.concurrent, Some(1.0));
        }
    }

    #[test]
    fn empty_workload_is_vacuous_success() {
        let level = run_level(&example_network(), &[], &Modes::default()).unwrap();
        assert_eq!(level, LevelOutcome { sequential: Some(1.0), concurrent: Some(1.0), single_path: Some(1.0) });
    }

    #[test]
    fn retries_route_demands_blocked_in_the_first_round() {
        let net = generate_network(&TopologyConfig { seed: 1, ..TopologyConfig::evaluation() }).unwrap();
        let workload = WorkloadConfig { num_flows: 128, vol_max: units(20), seed: 1 };
        let demands = sample_workload(&net, &workload).unwrap();
        let successes = |r: &RetryOutcome| r.outcomes.iter().filter(|o| o.is_success()).count();
        let once = retrying_concurrent_solve(&net, &demands, ConcurrentOptions::plain()).unwrap();
        let retried = retrying_concurrent_solve(&net, &demands, ConcurrentOptions::default()).unwrap();
        assert_eq!(once.rounds, 1);
        assert!(retried.rounds > 1);
        assert!(successes(&retried) > successes(&once), "{} vs {}", successes(&retried), successes(&once));
        // settling shifts balance between directions; total capacity is conserved
        let settled: Amount = net.edges().map(|e| e.capacity).sum::<Amount>()
            - retried.residual.edges().map(|e| e.capacity).sum::<Amount>();
        assert_eq!(settled, Amount::ZERO);
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_ci(&[0.7, 0.7, 0.7]), (0.7, 0.0));
        assert_eq!(mean_ci(&[1.0, 0.0]).0, 0.5);
        let (_, ci) = mean_ci(&[1.0, 0.0]);
        assert!((ci - 1.96 * (0.5f64).sqrt() / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_ci(&[0.25]), (0.25, 0.0));

        let outcome = |x| LevelOutcome { sequential: Some(x), concurrent: Some(x), single_path: None };
        let rows = summarize(&[128.0], &[vec![outcome(1.0), outcome(0.0)]]);
        assert_eq!(rows[0].seq_success, Some(0.5));
        assert_eq!(rows[0].single_path_success, None);
        assert_eq!(rows[0].ci_sp, None);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&[], "r", &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "r,seq_suc,conc_suc,sp_suc,ci_seq,ci_conc,ci_sp\n");
        assert!(parse_summary_csv(&text).unwrap().1.is_empty());

        let row = SummaryRow {
            level: 128.0,
            seq_success: Some(1.0),
            conc_success: Some(0.96875),
            single_path_success: None,
            ci_seq: Some(0.0),
            ci_conc: Some(0.012345),
            ci_sp: None,
        };
        emit_csv(&[row], "r", &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().nth(1), Some("128,1.0000,0.9688,,0.0000,0.0123,"));
        let (column, rows) = parse_summary_csv(&text).unwrap();
        assert_eq!(column, "r");
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].conc_success, Some(0.9688));

        assert!(parse_summary_csv("r,seq_suc\n1,0.5\n").is_err());
        assert!(parse_summary_csv("r,seq_suc,conc_suc,sp_suc,ci_seq,ci_conc,ci_sp\n1,1.5,,,,,\n").is_err());
    }

    #[test]
    fn config_json_and_validation() {
        let config = ExperimentConfig::evaluation_volume_sweep();
        assert_eq!(ExperimentConfig::from_json(&config.to_json()).unwrap(), config);

        let minimal = r#"{
            "topology": {"n": 20, "k": 4, "beta": 0.5, "cap_max_milli": 10000},
            "sweep": {"kind": "flow_count", "levels": [1, 2]},
            "runs": 2
        }"#;
        let parsed = ExperimentConfig::from_json(minimal).unwrap();
        assert_eq!(parsed.sweep, Sweep::FlowCount { levels: vec![1, 2], vol_max: units(20) });
        assert!(parsed.run_single_path);
        assert_eq!(parsed.concurrent, ConcurrentOptions::default());

        let mut bad = parsed.clone();
        bad.runs = 0;
        assert!(bad.validate().is_err());
        bad = parsed.clone();
        bad.sweep = Sweep::FlowCount { levels: vec![4, 2], vol_max: units(20) };
        assert!(bad.validate().is_err());
        bad.sweep = Sweep::Volume { fixed_k: 3, levels: vec![] };
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"runs": 1}"#).is_err());
    }

    #[test]
    fn seeds_differ_per_coordinate() {
        let seeds: std::collections::BTreeSet<u64> =
            (0..4).flat_map(|l| (0..4).flat_map(move |r| (0..2).map(move |s| derive_seed(9, l, r, s)))).collect();
        assert_eq!(seeds.len(), 32);
        assert_eq!(derive_seed(9, 1, 2, 0), derive_seed(9, 1, 2, 0));
        assert_ne!(derive_seed(9, 1, 2, 0), derive_seed(10, 1, 2, 0));
    }

    #[test]
    fn small_sweep_is_reproducible() {
        let config = ExperimentConfig {
            topology: TopologyConfig { n: 20, k: 4, beta: 0.5, cap_max: units(10), seed: 0 },
            sweep: Sweep::FlowCount { levels: vec![1, 4, 16], vol_max: units(20) },
            runs: 3,
            ..ExperimentConfig::desk_flow_sweep()
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for row in &a {
            for m in [row.seq_success, row.conc_success, row.single_path_success] {
                assert!((0.0..=1.0).contains(&m.unwrap()));
            }
        }
    }
}
