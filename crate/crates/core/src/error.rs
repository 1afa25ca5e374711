use thiserror::Error;

use crate::amount::Amount;
use crate::network::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid amount literal {0:?}")]
pub struct AmountParseError(pub String);

/// Violations of the flow network invariants.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("node {node} is out of range for a network of {nodes} nodes")]
    InvalidNode { node: NodeId, nodes: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: NodeId, to: NodeId },
    #[error("edge {from} -> {to} has negative capacity {capacity}")]
    NegativeCapacity { from: NodeId, to: NodeId, capacity: Amount },
    #[error("source and sink are both {0}")]
    SourceIsSink(NodeId),
    #[error("network needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("demand must be non-negative, got {0}")]
    NegativeDemand(Amount),
    #[error("no channel between {0} and {1}")]
    UnknownPair(NodeId, NodeId),
    #[error("flows on {from}->{to} and back are not skew-symmetric")]
    SkewViolation { from: NodeId, to: NodeId },
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A push or relabel was requested while its precondition does not hold.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("push {from} -> {to} is not admissible: {reason}")]
    PushNotAdmissible { from: NodeId, to: NodeId, reason: &'static str },
    #[error("relabel of {node} is not allowed: {reason}")]
    RelabelNotAllowed { node: NodeId, reason: &'static str },
    #[error("node {0} has excess but no residual out-edge")]
    NoResidualEdge(NodeId),
}

#[derive(Debug, Error)]
pub enum LockingError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("commodity {0} out of range")]
    UnknownCommodity(usize),
    #[error("commodity {commodity}: {source}")]
    Operation {
        commodity: usize,
        #[source]
        source: SolverError,
    },
    #[error("replayed operation {index} does not match the solver state: {detail}")]
    ReplayMismatch { index: usize, detail: String },
    #[error("step budget of {budget} operations exhausted")]
    BudgetExhausted { budget: u64 },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Locking(#[from] LockingError),
    #[error("protocol error at node {node}: {detail}")]
    Protocol { node: NodeId, detail: String },
    #[error("event budget of {budget} messages exhausted")]
    BudgetExhausted { budget: u64 },
    #[error("invariant violated after event {event}: {detail}")]
    Invariant { event: u64, detail: String },
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("ring degree k={k} must be even and smaller than n={n}")]
    InvalidDegree { n: usize, k: usize },
    #[error("rewiring probability {0} outside [0, 1]")]
    InvalidBeta(f64),
    #[error("{0} must be non-negative")]
    NegativeAmount(&'static str),
    #[error("need at least two nodes to sample distinct endpoints")]
    TooFewNodes,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Locking(#[from] LockingError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
