//! Pseudo-flows, excess and residual capacities.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::NetworkError;
use crate::network::{Adjacent, FlowNetwork, NodeId, PairId};

/// A skew-symmetric flow on a [`FlowNetwork`] together with cached node
/// excesses.
///
/// Each node pair stores one value, `f(lo, hi)`; `f(hi, lo)` is read as its
/// negation, so skew symmetry cannot drift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowAssignment {
    flow: Vec<Amount>,
    excess: Vec<Amount>,
}

impl FlowAssignment {
    pub fn zero(net: &FlowNetwork) -> Self {
        Self::with_sizes(net.node_count(), net.pair_count())
    }

    pub(crate) fn with_sizes(nodes: usize, pairs: usize) -> Self {
        FlowAssignment { flow: vec![Amount::ZERO; pairs], excess: vec![Amount::ZERO; nodes] }
    }

    /// Builds an assignment from directed values `f(u, v)`. Listing both
    /// directions of a pair is allowed only if the values are negatives of
    /// each other.
    pub fn from_edge_flows(
        net: &FlowNetwork,
        flows: impl IntoIterator<Item = (NodeId, NodeId, Amount)>,
    ) -> Result<Self, NetworkError> {
        let mut out = Self::zero(net);
        let mut seen: HashMap<PairId, Amount> = HashMap::new();
        for (u, v, amount) in flows {
            let adj = net.find_adjacent(u, v).ok_or(NetworkError::UnknownPair(u, v))?;
            let lo_value = if adj.forward { amount } else { -amount };
            if let Some(prev) = seen.insert(adj.pair, lo_value) {
                if prev != lo_value {
                    return Err(NetworkError::SkewViolation { from: u, to: v });
                }
                continue;
            }
            out.push_on(u, adj, amount);
        }
        Ok(out)
    }

    pub fn node_count(&self) -> usize {
        self.excess.len()
    }

    pub fn pair_count(&self) -> usize {
        self.flow.len()
    }

    /// `f(lo, hi)` for the pair.
    pub fn pair_flow(&self, pair: PairId) -> Amount {
        self.flow[pair.0]
    }

    /// `f(u, a.node)` where `a` is an entry of `u`'s adjacency list.
    pub fn along(&self, a: Adjacent) -> Amount {
        let f = self.flow[a.pair.0];
        if a.forward {
            f
        } else {
            -f
        }
    }

    /// `f(u, v)`; zero for pairs without a channel.
    pub fn flow(&self, net: &FlowNetwork, u: NodeId, v: NodeId) -> Amount {
        net.find_adjacent(u, v).map(|a| self.along(a)).unwrap_or(Amount::ZERO)
    }

    /// Cached `x_f(u)`.
    pub fn excess(&self, u: NodeId) -> Amount {
        self.excess[u.0]
    }

    /// Moves `delta` from `u` to `a.node`: `f(u,v) += delta`,
    /// `f(v,u) -= delta`, `x(u) -= delta`, `x(v) += delta`.
    pub fn push_on(&mut self, u: NodeId, a: Adjacent, delta: Amount) {
        if a.forward {
            self.flow[a.pair.0] += delta;
        } else {
            self.flow[a.pair.0] -= delta;
        }
        self.excess[u.0] -= delta;
        self.excess[a.node.0] += delta;
    }

    /// Recomputes `Σ_v f(v,u) - Σ_v f(u,v)` for every node from the stored
    /// pair flows, ignoring the cache.
    pub fn recompute_excess(&self, net: &FlowNetwork) -> Vec<Amount> {
        let mut out = vec![Amount::ZERO; self.excess.len()];
        for (p, &f) in self.flow.iter().enumerate() {
            let (lo, hi) = net.pair_endpoints(PairId(p));
            out[lo.0] -= f;
            out[hi.0] += f;
        }
        out
    }

    /// Flow value `x_f(t)` at the network's sink.
    pub fn value(&self, net: &FlowNetwork) -> Amount {
        self.excess(net.sink())
    }

    /// Every direction carrying positive flow, in pair order.
    pub fn positive_flows(&self, net: &FlowNetwork) -> Vec<(NodeId, NodeId, Amount)> {
        self.flow
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_zero())
            .map(|(p, &f)| {
                let (lo, hi) = net.pair_endpoints(PairId(p));
                if f.is_positive() {
                    (lo, hi, f)
                } else {
                    (hi, lo, -f)
                }
            })
            .collect()
    }

    /// Restricts a flow on a pre-source extension back to `base`, dropping
    /// the appended node and pair and recomputing excess.
    pub fn restrict_to(&self, base: &FlowNetwork) -> Self {
        Self::from_pair_flows(base, self.flow[..base.pair_count()].to_vec())
    }

    pub(crate) fn pair_flows(&self) -> &[Amount] {
        &self.flow
    }

    pub(crate) fn from_raw(flow: Vec<Amount>, excess: Vec<Amount>) -> Self {
        FlowAssignment { flow, excess }
    }

    pub(crate) fn from_pair_flows(net: &FlowNetwork, flow: Vec<Amount>) -> Self {
        assert_eq!(flow.len(), net.pair_count());
        let mut out = FlowAssignment { flow, excess: vec![Amount::ZERO; net.node_count()] };
        out.excess = out.recompute_excess(net);
        out
    }
}

/// One payment request: move `amount` from `source` to `sink`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Demand {
    pub source: NodeId,
    pub sink: NodeId,
    #[serde(rename = "demand_milli")]
    pub amount: Amount,
}

impl Demand {
    pub fn new(source: usize, sink: usize, amount: Amount) -> Self {
        Demand { source: NodeId(source), sink: NodeId(sink), amount }
    }
}

/// Result of routing one demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The full demand reached the sink.
    Success,
    /// Only the given amount could be delivered; nothing was committed.
    Infeasible(Amount),
}

impl Outcome {
    pub fn is_success(self) -> bool {
        matches!(self, Outcome::Success)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Success => write!(f, "success"),
            Outcome::Infeasible(delivered) => write!(f, "infeasible ({delivered} deliverable)"),
        }
    }
}

/// `c_f(u, v) = c(u, v) - f(u, v)`. Defined for every node pair; non-edges
/// have `c(u, v) = 0`.
pub fn residual_capacity(net: &FlowNetwork, f: &FlowAssignment, u: NodeId, v: NodeId) -> Amount {
    net.capacity(u, v) - f.flow(net, u, v)
}

/// `x_f(u)`
pub fn excess(f: &FlowAssignment, u: NodeId) -> Amount {
    f.excess(u)
}

/// Which flow constraints an assignment satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlowClass {
    /// Capacity constraint (or skew symmetry) is violated.
    NotPseudo,
    Pseudo,
    /// Non-negative excess at all nodes other than s and t.
    Pre,
    /// Zero excess at all nodes other than s and t.
    Feasible,
}

/// Classifies `f` on `net` using excess recomputed from the flows.
pub fn classify_flow(net: &FlowNetwork, f: &FlowAssignment) -> FlowClass {
    if f.pair_count() != net.pair_count() || f.node_count() != net.node_count() {
        return FlowClass::NotPseudo;
    }
    for p in 0..net.pair_count() {
        let pair = PairId(p);
        let flow = f.pair_flow(pair);
        if flow > net.pair_capacity(pair, true) || -flow > net.pair_capacity(pair, false) {
            return FlowClass::NotPseudo;
        }
    }
    let excess = f.recompute_excess(net);
    let inner = net.nodes().filter(|&v| v != net.source() && v != net.sink());
    let mut pre = true;
    let mut feasible = true;
    for v in inner {
        let x = excess[v.0];
        pre &= !x.is_negative();
        feasible &= x.is_zero();
    }
    if feasible {
        FlowClass::Feasible
    } else if pre {
        FlowClass::Pre
    } else {
        FlowClass::Pseudo
    }
}
