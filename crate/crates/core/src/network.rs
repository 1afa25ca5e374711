//! Directed capacitated channel graphs with a designated source and sink.
//!
//! Edges are grouped into unordered node pairs. A pair `{u, v}` with
//! `u < v` stores `c(u,v)` and `c(v,u)` side by side, so antiparallel
//! channels share one slot and flows on the pair can be stored once
//! (see [`crate::flow::FlowAssignment`]).

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::NetworkError;
use crate::flow::FlowAssignment;

/// Dense index into the node set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of an unordered node pair carrying at least one channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairId(pub usize);

impl PairId {
    pub const fn index(self) -> usize {
        self.0
    }
}

/// A directed payment channel `from -> to` with capacity `c(from, to)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: Amount,
}

impl ChannelEdge {
    pub fn new(from: usize, to: usize, capacity: Amount) -> Self {
        ChannelEdge { from: NodeId(from), to: NodeId(to), capacity }
    }
}

/// One entry of a node's adjacency list.
///
/// `forward` is true when the owning node is the lower endpoint of `pair`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adjacent {
    pub node: NodeId,
    pub pair: PairId,
    pub forward: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Pair {
    lo: NodeId,
    hi: NodeId,
    /// `[c(lo,hi), c(hi,lo)]`
    cap: [Amount; 2],
    /// Whether each direction is an edge of E.
    present: [bool; 2],
}

/// A flow network `(G, c, s, t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    node_count: usize,
    pairs: Vec<Pair>,
    adjacency: Vec<Vec<Adjacent>>,
    source: NodeId,
    sink: NodeId,
}

impl FlowNetwork {
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = ChannelEdge>,
        source: NodeId,
        sink: NodeId,
    ) -> Result<Self, NetworkError> {
        if node_count < 2 {
            return Err(NetworkError::TooFewNodes(node_count));
        }
        let mut net = FlowNetwork {
            node_count,
            pairs: Vec::new(),
            adjacency: vec![Vec::new(); node_count],
            source,
            sink,
        };
        net.check_node(source)?;
        net.check_node(sink)?;
        if source == sink {
            return Err(NetworkError::SourceIsSink(source));
        }
        for edge in edges {
            net.insert_edge(edge)?;
        }
        for list in &mut net.adjacency {
            list.sort_by_key(|a| a.node);
        }
        Ok(net)
    }

    fn check_node(&self, node: NodeId) -> Result<(), NetworkError> {
        if node.0 >= self.node_count {
            return Err(NetworkError::InvalidNode { node, nodes: self.node_count });
        }
        Ok(())
    }

    fn insert_edge(&mut self, edge: ChannelEdge) -> Result<(), NetworkError> {
        let ChannelEdge { from, to, capacity } = edge;
        self.check_node(from)?;
        self.check_node(to)?;
        if from == to {
            return Err(NetworkError::SelfLoop(from));
        }
        if capacity.is_negative() {
            return Err(NetworkError::NegativeCapacity { from, to, capacity });
        }
        let (lo, hi, dir) = if from < to { (from, to, 0) } else { (to, from, 1) };
        // adjacency is unsorted while edges are being inserted
        let existing = self.adjacency[lo.0].iter().find(|a| a.node == hi).map(|a| a.pair);
        let pair = match existing {
            Some(p) => p,
            None => {
                let p = PairId(self.pairs.len());
                self.pairs.push(Pair { lo, hi, cap: [Amount::ZERO; 2], present: [false; 2] });
                self.adjacency[lo.0].push(Adjacent { node: hi, pair: p, forward: true });
                self.adjacency[hi.0].push(Adjacent { node: lo, pair: p, forward: false });
                p
            }
        };
        let slot = &mut self.pairs[pair.0];
        if slot.present[dir] {
            return Err(NetworkError::DuplicateEdge { from, to });
        }
        slot.present[dir] = true;
        slot.cap[dir] = capacity;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    /// Neighbours of `u` in either direction, sorted by node id.
    pub fn adjacent(&self, u: NodeId) -> &[Adjacent] {
        &self.adjacency[u.0]
    }

    pub fn find_adjacent(&self, u: NodeId, v: NodeId) -> Option<Adjacent> {
        let list = self.adjacency.get(u.0)?;
        list.binary_search_by_key(&v, |a| a.node).ok().map(|i| list[i])
    }

    pub fn pair_endpoints(&self, pair: PairId) -> (NodeId, NodeId) {
        let p = &self.pairs[pair.0];
        (p.lo, p.hi)
    }

    /// Capacity of the pair in the direction seen from its lower endpoint
    /// (`forward`) or from its upper endpoint.
    pub fn pair_capacity(&self, pair: PairId, forward: bool) -> Amount {
        self.pairs[pair.0].cap[if forward { 0 } else { 1 }]
    }

    /// `c(u, v)`, zero when `(u, v)` is not an edge.
    pub fn capacity(&self, u: NodeId, v: NodeId) -> Amount {
        self.find_adjacent(u, v)
            .map(|a| self.pair_capacity(a.pair, a.forward))
            .unwrap_or(Amount::ZERO)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.find_adjacent(u, v)
            .map(|a| self.pairs[a.pair.0].present[if a.forward { 0 } else { 1 }])
            .unwrap_or(false)
    }

    /// All edges of E in pair order.
    pub fn edges(&self) -> impl Iterator<Item = ChannelEdge> + '_ {
        self.pairs.iter().flat_map(|p| {
            let fwd = p.present[0].then_some(ChannelEdge { from: p.lo, to: p.hi, capacity: p.cap[0] });
            let bwd = p.present[1].then_some(ChannelEdge { from: p.hi, to: p.lo, capacity: p.cap[1] });
            fwd.into_iter().chain(bwd)
        })
    }

    pub fn edge_count(&self) -> usize {
        self.pairs.iter().map(|p| p.present.iter().filter(|&&x| x).count()).sum()
    }

    /// `Σ_v c(u, v)`
    pub fn out_capacity(&self, u: NodeId) -> Amount {
        self.adjacent(u).iter().map(|a| self.pair_capacity(a.pair, a.forward)).sum()
    }

    /// Same channels with a different source/sink designation.
    pub fn with_terminals(&self, source: NodeId, sink: NodeId) -> Result<Self, NetworkError> {
        self.check_node(source)?;
        self.check_node(sink)?;
        if source == sink {
            return Err(NetworkError::SourceIsSink(source));
        }
        let mut net = self.clone();
        net.source = source;
        net.sink = sink;
        Ok(net)
    }

    /// Adds a pre-source `s'` with the single edge `(s', s)` of capacity
    /// `demand` and makes it the new source. Any flow from `s'` therefore
    /// carries at most `demand` units.
    ///
    /// The pre-source receives id `node_count()` and its pair is appended
    /// last, so a flow on the extended network restricts to the original
    /// by truncation.
    pub fn with_pre_source(&self, demand: Amount) -> Result<Self, NetworkError> {
        if demand.is_negative() {
            return Err(NetworkError::NegativeDemand(demand));
        }
        let mut net = self.clone();
        let pre = NodeId(self.node_count);
        let s = self.source;
        let pair = PairId(net.pairs.len());
        net.pairs.push(Pair { lo: s, hi: pre, cap: [Amount::ZERO, demand], present: [false, true] });
        net.adjacency[s.0].push(Adjacent { node: pre, pair, forward: true });
        net.adjacency.push(vec![Adjacent { node: s, pair, forward: false }]);
        net.node_count += 1;
        net.source = pre;
        Ok(net)
    }

    /// Replaces every capacity by its residual under `flow`, i.e. commits
    /// the flow: `c'(u,v) = c(u,v) - f(u,v)`. Directions whose residual
    /// becomes positive join E.
    pub fn commit_flow(&mut self, flow: &FlowAssignment) {
        assert_eq!(flow.pair_count(), self.pairs.len(), "flow does not belong to this network");
        for (p, pair) in self.pairs.iter_mut().enumerate() {
            let f = flow.pair_flow(PairId(p));
            if f.is_zero() {
                continue;
            }
            pair.cap[0] -= f;
            pair.cap[1] += f;
            for dir in 0..2 {
                if pair.cap[dir].is_positive() {
                    pair.present[dir] = true;
                }
            }
        }
    }

    /// Moves `amount` along `path`: each hop loses `amount` of capacity in
    /// the forward direction and gains it in the reverse direction, as a
    /// settled payment shifts channel balance.
    pub fn settle_path(&mut self, path: &[NodeId], amount: Amount) -> Result<(), NetworkError> {
        for hop in path.windows(2) {
            let (u, v) = (hop[0], hop[1]);
            let a = self.find_adjacent(u, v).ok_or(NetworkError::UnknownPair(u, v))?;
            let (fwd, bwd) = if a.forward { (0, 1) } else { (1, 0) };
            let pair = &mut self.pairs[a.pair.0];
            pair.cap[fwd] -= amount;
            pair.cap[bwd] += amount;
            debug_assert!(!pair.cap[fwd].is_negative(), "path settlement below zero on {u}->{v}");
            if pair.cap[bwd].is_positive() {
                pair.present[bwd] = true;
            }
        }
        Ok(())
    }

    pub fn to_graph_file(&self) -> GraphFile {
        GraphFile {
            nodes: self.node_count,
            edges: self
                .edges()
                .map(|e| EdgeRecord { from: e.from.0, to: e.to.0, capacity_milli: e.capacity.milli() })
                .collect(),
            source: self.source.0,
            sink: self.sink.0,
        }
    }

    pub fn from_graph_file(file: &GraphFile) -> Result<Self, NetworkError> {
        FlowNetwork::new(
            file.nodes,
            file.edges
                .iter()
                .map(|e| ChannelEdge::new(e.from, e.to, Amount::from_milli(e.capacity_milli))),
            NodeId(file.source),
            NodeId(file.sink),
        )
    }

    pub fn from_json(json: &str) -> Result<Self, NetworkError> {
        let file: GraphFile = serde_json::from_str(json)?;
        Self::from_graph_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_graph_file()).expect("graph file serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetworkError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// On-disk graph format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: usize,
    pub edges: Vec<EdgeRecord>,
    pub source: usize,
    pub sink: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub capacity_milli: i64,
}

/// The four-node example network: `s=0, v2=1, v3=2, t=3` with
/// `c(s,v2)=3, c(s,v3)=2, c(v2,v3)=2, c(v2,t)=1, c(v3,t)=3`. Its maximum
/// flow is 4.
pub fn example_network() -> FlowNetwork {
    let u = Amount::from_units;
    FlowNetwork::new(
        4,
        [
            ChannelEdge::new(0, 1, u(3)),
            ChannelEdge::new(0, 2, u(2)),
            ChannelEdge::new(1, 2, u(2)),
            ChannelEdge::new(1, 3, u(1)),
            ChannelEdge::new(2, 3, u(3)),
        ],
        NodeId(0),
        NodeId(3),
    )
    .expect("example network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units(x: i64) -> Amount {
        Amount::from_units(x)
    }

    #[test]
    fn capacity_lookup_defaults_to_zero() {
        let net = example_network();
        assert_eq!(net.capacity(NodeId(0), NodeId(1)), units(3));
        assert_eq!(net.capacity(NodeId(1), NodeId(0)), Amount::ZERO);
        assert_eq!(net.capacity(NodeId(0), NodeId(3)), Amount::ZERO);
        assert!(net.has_edge(NodeId(2), NodeId(3)));
        assert!(!net.has_edge(NodeId(3), NodeId(2)));
        assert_eq!(net.edge_count(), 5);
    }

    #[test]
    fn rejects_invalid_edges() {
        let s = NodeId(0);
        let t = NodeId(1);
        assert!(matches!(
            FlowNetwork::new(2, [ChannelEdge::new(0, 0, units(1))], s, t),
            Err(NetworkError::SelfLoop(_))
        ));
        assert!(matches!(
            FlowNetwork::new(2, [ChannelEdge::new(0, 1, units(1)), ChannelEdge::new(0, 1, units(2))], s, t),
            Err(NetworkError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            FlowNetwork::new(2, [ChannelEdge::new(0, 1, units(-1))], s, t),
            Err(NetworkError::NegativeCapacity { .. })
        ));
        assert!(matches!(
            FlowNetwork::new(2, [ChannelEdge::new(0, 5, units(1))], s, t),
            Err(NetworkError::InvalidNode { .. })
        ));
        assert!(matches!(FlowNetwork::new(2, [], s, s), Err(NetworkError::SourceIsSink(_))));
    }

    #[test]
    fn antiparallel_edges_share_a_pair() {
        let net = FlowNetwork::new(
            2,
            [ChannelEdge::new(0, 1, units(5)), ChannelEdge::new(1, 0, units(3))],
            NodeId(0),
            NodeId(1),
        )
        .unwrap();
        assert_eq!(net.pair_count(), 1);
        assert_eq!(net.capacity(NodeId(0), NodeId(1)), units(5));
        assert_eq!(net.capacity(NodeId(1), NodeId(0)), units(3));
    }

    #[test]
    fn pre_source_extends_network() {
        let net = example_network();
        let ext = net.with_pre_source(units(2)).unwrap();
        assert_eq!(ext.node_count(), 5);
        assert_eq!(ext.source(), NodeId(4));
        assert_eq!(ext.sink(), NodeId(3));
        assert_eq!(ext.capacity(NodeId(4), NodeId(0)), units(2));
        assert_eq!(ext.capacity(NodeId(0), NodeId(4)), Amount::ZERO);
        // the original is untouched
        assert_eq!(net.node_count(), 4);
        assert!(matches!(net.with_pre_source(units(-1)), Err(NetworkError::NegativeDemand(_))));
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let net = example_network();
        let back = FlowNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(back.to_graph_file(), net.to_graph_file());

        let bad = r#"{"nodes":2,"edges":[{"from":0,"to":0,"capacity_milli":1}],"source":0,"sink":1}"#;
        assert!(matches!(FlowNetwork::from_json(bad), Err(NetworkError::SelfLoop(_))));
        let extra = r#"{"nodes":2,"edges":[],"source":0,"sink":1,"bogus":3}"#;
        assert!(matches!(FlowNetwork::from_json(extra), Err(NetworkError::Json(_))));
    }
}
