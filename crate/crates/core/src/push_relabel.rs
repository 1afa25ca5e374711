//! Sequential single-commodity push-relabel.
//!
//! Active nodes are processed in FIFO order and each operation scans the
//! node's neighbours in increasing id order, so traces are deterministic.
//! Feasible flows for a demand `d` are found by attaching a pre-source with
//! a single edge of capacity `d` and computing a maximum flow.

use std::collections::VecDeque;

use crate::amount::Amount;
use crate::error::{NetworkError, SolverError};
use crate::flow::{Demand, FlowAssignment, Outcome};
use crate::network::{Adjacent, FlowNetwork, NodeId};

/// Node heights `h: V -> N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightLabels(Vec<u32>);

impl HeightLabels {
    pub fn zero(nodes: usize) -> Self {
        HeightLabels(vec![0; nodes])
    }

    pub fn from_vec(heights: Vec<u32>) -> Self {
        HeightLabels(heights)
    }

    pub fn get(&self, u: NodeId) -> u32 {
        self.0[u.0]
    }

    pub(crate) fn set(&mut self, u: NodeId, h: u32) {
        debug_assert!(h >= self.0[u.0], "heights never decrease");
        self.0[u.0] = h;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

/// What a single solver step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Push { from: NodeId, to: NodeId, amount: Amount },
    Relabel { node: NodeId, height: u32 },
}

/// Push-relabel working state on one network.
#[derive(Clone, Debug)]
pub struct PushRelabel<'a> {
    net: &'a FlowNetwork,
    flow: FlowAssignment,
    heights: HeightLabels,
    queue: VecDeque<NodeId>,
    queued: Vec<bool>,
}

impl<'a> PushRelabel<'a> {
    /// Sets `h(s) = |V|`, all other heights and flows to zero, then
    /// saturates every edge leaving `s`.
    pub fn initialize(net: &'a FlowNetwork) -> Self {
        let n = net.node_count();
        let mut heights = HeightLabels::zero(n);
        heights.set(net.source(), n as u32);
        let mut solver = PushRelabel {
            net,
            flow: FlowAssignment::zero(net),
            heights,
            queue: VecDeque::new(),
            queued: vec![false; n],
        };
        let s = net.source();
        for &a in net.adjacent(s) {
            let cap = net.pair_capacity(a.pair, a.forward);
            if cap.is_positive() {
                solver.flow.push_on(s, a, cap);
                solver.enqueue(a.node);
            }
        }
        solver
    }

    pub fn network(&self) -> &FlowNetwork {
        self.net
    }

    pub fn flow(&self) -> &FlowAssignment {
        &self.flow
    }

    pub fn heights(&self) -> &HeightLabels {
        &self.heights
    }

    pub fn excess(&self, u: NodeId) -> Amount {
        self.flow.excess(u)
    }

    /// Nodes other than s and t holding positive excess, in queue order.
    pub fn active(&self) -> Vec<NodeId> {
        self.queue.iter().copied().filter(|&u| self.excess(u).is_positive()).collect()
    }

    fn is_terminal(&self, u: NodeId) -> bool {
        u == self.net.source() || u == self.net.sink()
    }

    fn enqueue(&mut self, u: NodeId) {
        if !self.is_terminal(u) && !self.queued[u.0] && self.excess(u).is_positive() {
            self.queued[u.0] = true;
            self.queue.push_back(u);
        }
    }

    fn residual_along(&self, a: Adjacent) -> Amount {
        self.net.pair_capacity(a.pair, a.forward) - self.flow.along(a)
    }

    /// `c_f(u, v)`
    pub fn residual(&self, u: NodeId, v: NodeId) -> Amount {
        crate::flow::residual_capacity(self.net, &self.flow, u, v)
    }

    /// Pushes `min(x_f(u), c_f(u,v))` from `u` to `v`. Requires
    /// `x_f(u) > 0`, `c_f(u,v) > 0` and `h(u) = h(v) + 1`.
    pub fn push(&mut self, u: NodeId, v: NodeId) -> Result<Amount, SolverError> {
        let reject = |reason| SolverError::PushNotAdmissible { from: u, to: v, reason };
        let a = self.net.find_adjacent(u, v).ok_or_else(|| reject("no channel"))?;
        if !self.excess(u).is_positive() {
            return Err(reject("no excess"));
        }
        let residual = self.residual_along(a);
        if !residual.is_positive() {
            return Err(reject("edge saturated"));
        }
        if self.heights.get(u) != self.heights.get(v) + 1 {
            return Err(reject("target is not one level below"));
        }
        let delta = self.excess(u).min(residual);
        self.flow.push_on(u, a, delta);
        self.enqueue(v);
        Ok(delta)
    }

    /// Raises `h(u)` to one above its lowest residual neighbour. Requires
    /// positive excess and `h(u) <= h(v)` for every residual edge `(u,v)`.
    pub fn relabel(&mut self, u: NodeId) -> Result<u32, SolverError> {
        let reject = |reason| SolverError::RelabelNotAllowed { node: u, reason };
        if self.is_terminal(u) {
            return Err(reject("source and sink keep fixed heights"));
        }
        if !self.excess(u).is_positive() {
            return Err(reject("no excess"));
        }
        let hu = self.heights.get(u);
        let mut lowest: Option<u32> = None;
        for &a in self.net.adjacent(u) {
            if !self.residual_along(a).is_positive() {
                continue;
            }
            let hv = self.heights.get(a.node);
            if hu > hv {
                return Err(reject("an admissible push exists"));
            }
            lowest = Some(lowest.map_or(hv, |m| m.min(hv)));
        }
        let new_height = 1 + lowest.ok_or(SolverError::NoResidualEdge(u))?;
        self.heights.set(u, new_height);
        Ok(new_height)
    }

    fn first_admissible(&self, u: NodeId) -> Option<NodeId> {
        let hu = self.heights.get(u);
        self.net
            .adjacent(u)
            .iter()
            .find(|a| hu == self.heights.get(a.node) + 1 && self.residual_along(**a).is_positive())
            .map(|a| a.node)
    }

    /// Performs one push or relabel on the node at the head of the queue.
    /// Returns `None` once no active node remains.
    pub fn step(&mut self) -> Option<Step> {
        let u = loop {
            let &u = self.queue.front()?;
            if self.excess(u).is_positive() {
                break u;
            }
            self.queue.pop_front();
            self.queued[u.0] = false;
        };
        let step = match self.first_admissible(u) {
            Some(v) => {
                let amount = self.push(u, v).expect("admissible push");
                Step::Push { from: u, to: v, amount }
            }
            None => {
                let height = self.relabel(u).expect("active node without admissible push can relabel");
                Step::Relabel { node: u, height }
            }
        };
        if !self.excess(u).is_positive() {
            self.queue.pop_front();
            self.queued[u.0] = false;
        }
        Some(step)
    }

    /// Runs until no node other than s and t holds excess.
    pub fn run(&mut self) {
        while self.step().is_some() {}
    }

    /// `h(u) <= h(v) + 1` for every residual edge, `h(t) = 0`,
    /// `h(s) = |V|`.
    pub fn is_valid_labeling(&self) -> bool {
        let n = self.net.node_count() as u32;
        if self.heights.get(self.net.sink()) != 0 || self.heights.get(self.net.source()) != n {
            return false;
        }
        self.net.nodes().all(|u| {
            self.net.adjacent(u).iter().all(|&a| {
                !self.residual_along(a).is_positive() || self.heights.get(u) <= self.heights.get(a.node) + 1
            })
        })
    }

    pub fn into_flow(self) -> FlowAssignment {
        self.flow
    }
}

/// Maximum s-t flow and its value `x_f(t)`.
pub fn max_flow(net: &FlowNetwork) -> (FlowAssignment, Amount) {
    let mut solver = PushRelabel::initialize(net);
    solver.run();
    let flow = solver.into_flow();
    let value = flow.value(net);
    (flow, value)
}

/// Outcome of a feasible-flow query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeasibleFlow {
    /// A feasible flow of exactly the requested value on the original
    /// network.
    Success(FlowAssignment),
    Infeasible { max_deliverable: Amount },
}

impl FeasibleFlow {
    pub fn outcome(&self) -> Outcome {
        match self {
            FeasibleFlow::Success(_) => Outcome::Success,
            FeasibleFlow::Infeasible { max_deliverable } => Outcome::Infeasible(*max_deliverable),
        }
    }
}

/// Finds a flow of value exactly `demand` from `s` to `t`, or reports the
/// most that could be delivered.
pub fn feasible_flow(net: &FlowNetwork, demand: Amount) -> Result<FeasibleFlow, NetworkError> {
    let extended = net.with_pre_source(demand)?;
    let (flow, value) = max_flow(&extended);
    if value == demand {
        Ok(FeasibleFlow::Success(flow.restrict_to(net)))
    } else {
        Ok(FeasibleFlow::Infeasible { max_deliverable: value })
    }
}

/// Per-demand outcomes of [`sequential_batch`] and the capacities left
/// after all successful demands were committed.
#[derive(Clone, Debug)]
pub struct BatchResult {
    pub outcomes: Vec<Outcome>,
    pub residual: FlowNetwork,
}

/// Routes demands one after another. A successful demand's flow is
/// committed by replacing capacities with residual capacities, so the next
/// instance starts from the state the previous one left behind. A failed
/// demand leaves the network untouched.
pub fn sequential_batch(net: &FlowNetwork, demands: &[Demand]) -> Result<BatchResult, NetworkError> {
    let mut residual = net.clone();
    let mut outcomes = Vec::with_capacity(demands.len());
    for demand in demands {
        let instance = residual.with_terminals(demand.source, demand.sink)?;
        match feasible_flow(&instance, demand.amount)? {
            FeasibleFlow::Success(flow) => {
                residual.commit_flow(&flow);
                outcomes.push(Outcome::Success);
            }
            FeasibleFlow::Infeasible { max_deliverable } => {
                outcomes.push(Outcome::Infeasible(max_deliverable));
            }
        }
    }
    Ok(BatchResult { outcomes, residual })
}
