//! Evaluation networks and workloads: Watts-Strogatz small-world graphs
//! with uniformly sampled channel capacities and random payment demands.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::TopologyError;
use crate::flow::Demand;
use crate::network::{ChannelEdge, FlowNetwork, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub n: usize,
    /// Ring-lattice degree; each node starts linked to `k/2` neighbours on
    /// either side.
    pub k: usize,
    pub beta: f64,
    #[serde(rename = "cap_max_milli")]
    pub cap_max: Amount,
    #[serde(default)]
    pub seed: u64,
}

impl TopologyConfig {
    /// n = 200, degree 10, beta = 0.5, capacities in [0, 10].
    pub fn evaluation() -> Self {
        TopologyConfig { n: 200, k: 10, beta: 0.5, cap_max: Amount::from_units(10), seed: 0 }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if !self.k.is_multiple_of(2) || self.k >= self.n {
            return Err(TopologyError::InvalidDegree { n: self.n, k: self.k });
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(TopologyError::InvalidBeta(self.beta));
        }
        if self.cap_max.is_negative() {
            return Err(TopologyError::NegativeAmount("cap_max"));
        }
        Ok(())
    }
}

/// An undirected simple graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    nodes: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Skeleton {
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    fn insert(&mut self, a: usize, b: usize) {
        self.edges.insert((a.min(b), a.max(b)));
    }

    fn remove(&mut self, a: usize, b: usize) {
        self.edges.remove(&(a.min(b), a.max(b)));
    }
}

/// Watts-Strogatz small-world graph.
///
/// Starts from a ring lattice where node `u` links to `u+1 ..= u+k/2`
/// (mod n). Then, for each offset `j = 1..=k/2` and each node `u` in
/// order, the lattice edge `(u, u+j)` is rewired with probability `beta`
/// to `(u, w)` for a uniform `w` that is neither `u` nor already adjacent
/// to `u`. Nodes already adjacent to everything keep their edge. The
/// edge count stays `n k / 2`; connectivity is not guaranteed.
pub fn watts_strogatz(cfg: &TopologyConfig) -> Result<Skeleton, TopologyError> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g = Skeleton { nodes: n, edges: BTreeSet::new() };
    for u in 0..n {
        for j in 1..=cfg.k / 2 {
            g.insert(u, (u + j) % n);
        }
    }
    let degrees = |g: &Skeleton, u: usize| g.edges.iter().filter(|&&(a, b)| a == u || b == u).count();
    for j in 1..=cfg.k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !g.contains(u, v) || rng.gen::<f64>() >= cfg.beta {
                continue;
            }
            if degrees(&g, u) >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !g.contains(u, w) {
                    break w;
                }
            };
            g.remove(u, v);
            g.insert(u, w);
        }
    }
    Ok(g)
}

/// Turns every undirected edge into two directed channels with
/// independent capacities uniform on `[0, cap_max]` (in milli-units).
pub fn assign_capacities(skeleton: &Skeleton, cap_max: Amount, seed: u64) -> Result<FlowNetwork, TopologyError> {
    if cap_max.is_negative() {
        return Err(TopologyError::NegativeAmount("cap_max"));
    }
    if skeleton.nodes < 2 {
        return Err(TopologyError::TooFewNodes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = || Amount::from_milli(rng.gen_range(0..=cap_max.milli()));
    let mut edges = Vec::with_capacity(2 * skeleton.edge_count());
    for (a, b) in skeleton.edges() {
        edges.push(ChannelEdge::new(a, b, sample()));
        edges.push(ChannelEdge::new(b, a, sample()));
    }
    Ok(FlowNetwork::new(skeleton.nodes, edges, NodeId(0), NodeId(1)).expect("skeleton edges form a valid network"))
}

/// Skeleton plus capacities, both derived from `cfg.seed`.
pub fn generate_network(cfg: &TopologyConfig) -> Result<FlowNetwork, TopologyError> {
    let skeleton = watts_strogatz(cfg)?;
    assign_capacities(&skeleton, cfg.cap_max, cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub num_flows: usize,
    #[serde(rename = "vol_max_milli")]
    pub vol_max: Amount,
    #[serde(default)]
    pub seed: u64,
}

/// Demands with uniformly drawn distinct endpoints and volumes uniform on
/// `[0, vol_max]`.
pub fn sample_workload(net: &FlowNetwork, cfg: &WorkloadConfig) -> Result<Vec<Demand>, TopologyError> {
    let n = net.node_count();
    if n < 2 {
        return Err(TopologyError::TooFewNodes);
    }
    if cfg.vol_max.is_negative() {
        return Err(TopologyError::NegativeAmount("vol_max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.num_flows)
        .map(|_| {
            let source = rng.gen_range(0..n);
            let mut sink = rng.gen_range(0..n - 1);
            if sink >= source {
                sink += 1;
            }
            let amount = Amount::from_milli(rng.gen_range(0..=cfg.vol_max.milli()));
            Demand::new(source, sink, amount)
        })
        .collect())
}
