//! Route selection for payment channel networks treated as flow networks.

pub mod amount;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod locking;
pub mod network;
pub mod push_relabel;
pub mod sim;
pub mod topology;

pub use amount::Amount;
pub use flow::{classify_flow, excess, residual_capacity, Demand, FlowAssignment, FlowClass, Outcome};
pub use network::{example_network, ChannelEdge, FlowNetwork, NodeId};
pub use push_relabel::{feasible_flow, max_flow, sequential_batch, FeasibleFlow, PushRelabel};
pub use locking::{concurrent_solve, CommodityId, ConcurrentOutcome, ConcurrentSolver, MultiCommodityState, Scheduler};
