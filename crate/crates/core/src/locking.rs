//! Concurrent multi-commodity push-relabel with capacity locking.
//!
//! Every commodity `i` runs its own push-relabel instance (own flow `f_i`,
//! excess `x_i` and heights `h_i`) on a shared channel graph. Positive flow
//! of a commodity on an edge locks that much capacity:
//!
//! ```text
//! l_i(u,v) = max(0, f_i(u,v))        L(u,v) = Σ_i l_i(u,v)
//! c_i(u,v) = c(u,v) - L(u,v) + l_i(v,u)
//! ```
//!
//! A commodity may therefore only use unlocked capacity plus the reverse
//! capacity created by its own flow, never the reverse capacity created by
//! another commodity. With pushes bounded by `c_i`, the summed flow on every
//! edge stays within its capacity.
//!
//! Each commodity gets a private pre-source `s_i'` (node id `|V|` in the
//! commodity's view) with a single edge `(s_i', s_i)` of capacity `d_i`.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::{LockingError, NetworkError, SolverError};
use crate::flow::{Demand, FlowAssignment, Outcome};
use crate::network::{Adjacent, FlowNetwork, NodeId, PairId};
use crate::push_relabel::HeightLabels;

/// Default cap on scheduler steps before giving up.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommodityId(pub usize);

impl fmt::Display for CommodityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One source-sink demand with its own push-relabel state.
#[derive(Clone, Debug)]
pub struct Commodity {
    id: CommodityId,
    demand: Demand,
    heights: HeightLabels,
    /// Base pairs followed by the pre-source pair `(s_i, s_i')`.
    flow: FlowAssignment,
}

impl Commodity {
    pub fn id(&self) -> CommodityId {
        self.id
    }

    pub fn demand(&self) -> Demand {
        self.demand
    }

    pub fn source(&self) -> NodeId {
        self.demand.source
    }

    pub fn sink(&self) -> NodeId {
        self.demand.sink
    }

    /// Node id of this commodity's pre-source, one past the real nodes.
    pub fn pre_source(&self) -> NodeId {
        NodeId(self.heights.as_slice().len() - 1)
    }

    pub fn heights(&self) -> &HeightLabels {
        &self.heights
    }

    pub fn excess(&self, u: NodeId) -> Amount {
        self.flow.excess(u)
    }

    /// `x_i(t_i)`
    pub fn delivered(&self) -> Amount {
        self.flow.excess(self.demand.sink)
    }

    /// The commodity's flow on the real channels only, as a flow on `net`
    /// with `s_i` and `t_i` as terminals.
    pub fn restricted_flow(&self, net: &FlowNetwork) -> FlowAssignment {
        FlowAssignment::from_pair_flows(net, self.flow.pair_flows()[..net.pair_count()].to_vec())
    }

    fn pre_pair(&self) -> PairId {
        PairId(self.flow.pair_count() - 1)
    }

    fn pre_arc_from_source(&self) -> Adjacent {
        Adjacent { node: self.pre_source(), pair: self.pre_pair(), forward: true }
    }

    fn pre_arc_to_source(&self) -> Adjacent {
        Adjacent { node: self.demand.source, pair: self.pre_pair(), forward: false }
    }
}

/// Total locked capacity `L(u,v)` per directed edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LockTable {
    /// `[L(lo,hi), L(hi,lo)]` per base pair.
    locked: Vec<[Amount; 2]>,
}

impl LockTable {
    fn empty(pairs: usize) -> Self {
        LockTable { locked: vec![[Amount::ZERO; 2]; pairs] }
    }

    /// `Σ_i max(0, f_i)` on every pair, from scratch.
    pub fn recompute<'a>(pairs: usize, commodities: impl IntoIterator<Item = &'a Commodity>) -> Self {
        let mut table = Self::empty(pairs);
        for c in commodities {
            for p in 0..pairs {
                let f = c.flow.pair_flow(PairId(p));
                table.locked[p][0] += f.positive_part();
                table.locked[p][1] += (-f).positive_part();
            }
        }
        table
    }

    /// `L` in the direction given by `forward` (lower to upper endpoint).
    pub fn total(&self, pair: PairId, forward: bool) -> Amount {
        self.locked[pair.0][if forward { 0 } else { 1 }]
    }

    /// Applies the change of one commodity's pair flow from `old` to `new`
    /// (both read from the lower endpoint). Only that commodity's terms of
    /// the sums change, so this equals a full recomputation of the pair.
    fn update(&mut self, pair: PairId, old: Amount, new: Amount) {
        let slot = &mut self.locked[pair.0];
        slot[0] += new.positive_part() - old.positive_part();
        slot[1] += (-new).positive_part() - (-old).positive_part();
    }
}

/// A broken invariant of the multi-commodity state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvariantViolation {
    /// `Σ_i f_i(u,v) > c(u,v)`
    TotalCapacity { from: NodeId, to: NodeId, total: Amount, capacity: Amount },
    /// `Σ_i f_i(u,v) > L(u,v)` or `L(u,v) > c(u,v)`
    LockChain { from: NodeId, to: NodeId, total: Amount, locked: Amount, capacity: Amount },
    /// Cached `L(u,v)` differs from `Σ_i max(0, f_i(u,v))`.
    LockCache { from: NodeId, to: NodeId, cached: Amount, recomputed: Amount },
    Skew { commodity: CommodityId, from: NodeId, to: NodeId },
    NegativeExcess { commodity: CommodityId, node: NodeId, excess: Amount },
    ExcessCache { commodity: CommodityId, node: NodeId },
    PreSourceFlow { commodity: CommodityId, flow: Amount },
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::error::Error for InvariantViolation {}

/// Shared channel graph, all commodities and the lock table.
#[derive(Clone, Debug)]
pub struct MultiCommodityState {
    net: FlowNetwork,
    commodities: Vec<Commodity>,
    locks: LockTable,
}

impl MultiCommodityState {
    /// Attaches a pre-source to every demand and saturates it, so `s_i`
    /// starts with excess `d_i`. Heights are `|V| + 1` at the pre-source and
    /// zero elsewhere. The source/sink designation of `net` is ignored.
    pub fn new(net: &FlowNetwork, demands: &[Demand]) -> Result<Self, LockingError> {
        let n = net.node_count();
        let pairs = net.pair_count();
        let mut commodities = Vec::with_capacity(demands.len());
        for (i, d) in demands.iter().enumerate() {
            for node in [d.source, d.sink] {
                if node.0 >= n {
                    return Err(NetworkError::InvalidNode { node, nodes: n }.into());
                }
            }
            if d.source == d.sink {
                return Err(NetworkError::SourceIsSink(d.source).into());
            }
            if d.amount.is_negative() {
                return Err(NetworkError::NegativeDemand(d.amount).into());
            }
            let mut heights = HeightLabels::zero(n + 1);
            heights.set(NodeId(n), n as u32 + 1);
            let mut c = Commodity {
                id: CommodityId(i),
                demand: *d,
                heights,
                flow: FlowAssignment::with_sizes(n + 1, pairs + 1),
            };
            let arc = c.pre_arc_to_source();
            c.flow.push_on(NodeId(n), arc, d.amount);
            commodities.push(c);
        }
        Ok(MultiCommodityState { net: net.clone(), commodities, locks: LockTable::empty(pairs) })
    }

    /// Rebuilds a state from per-commodity pair flows and heights, e.g. a
    /// snapshot assembled from distributed node views. `flows[i]` holds the
    /// base pair flows followed by `f_i(s_i, s_i')`.
    pub fn from_parts(
        net: &FlowNetwork,
        demands: &[Demand],
        flows: Vec<Vec<Amount>>,
        heights: Vec<Vec<u32>>,
    ) -> Result<Self, LockingError> {
        let mut state = Self::new(net, demands)?;
        let n = net.node_count();
        for ((c, flow), h) in state.commodities.iter_mut().zip(flows).zip(heights) {
            assert_eq!(flow.len(), net.pair_count() + 1);
            assert_eq!(h.len(), n + 1);
            let mut excess = vec![Amount::ZERO; n + 1];
            for (p, &f) in flow.iter().enumerate() {
                let (lo, hi) = if p < net.pair_count() {
                    net.pair_endpoints(PairId(p))
                } else {
                    (c.demand.source, NodeId(n))
                };
                excess[lo.0] -= f;
                excess[hi.0] += f;
            }
            c.flow = FlowAssignment::from_raw(flow, excess);
            c.heights = HeightLabels::from_vec(h);
        }
        state.locks = LockTable::recompute(net.pair_count(), &state.commodities);
        Ok(state)
    }

    pub fn network(&self) -> &FlowNetwork {
        &self.net
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn commodity(&self, i: CommodityId) -> Result<&Commodity, LockingError> {
        self.commodities.get(i.0).ok_or(LockingError::UnknownCommodity(i.0))
    }

    pub fn locks(&self) -> &LockTable {
        &self.locks
    }

    /// Upper bound on per-commodity heights, `2 (|V| + 1)`.
    pub fn height_bound(&self) -> u32 {
        2 * (self.net.node_count() as u32 + 1)
    }

    fn arc(&self, c: &Commodity, u: NodeId, v: NodeId) -> Option<Adjacent> {
        let pre = c.pre_source();
        if u == pre {
            return (v == c.demand.source).then(|| c.pre_arc_to_source());
        }
        if v == pre {
            return (u == c.demand.source).then(|| c.pre_arc_from_source());
        }
        if u.0 >= pre.0 || v.0 >= pre.0 {
            return None;
        }
        self.net.find_adjacent(u, v)
    }

    /// `c_i` along an arc leaving `u`.
    fn residual_along(&self, c: &Commodity, a: Adjacent) -> Amount {
        if a.pair == c.pre_pair() {
            // only commodity i ever locks its own pre-source edge
            let cap = if a.forward { Amount::ZERO } else { c.demand.amount };
            return cap - c.flow.along(a);
        }
        let cap = self.net.pair_capacity(a.pair, a.forward);
        let locked = self.locks.total(a.pair, a.forward);
        let own_reverse = (-c.flow.along(a)).positive_part();
        cap - locked + own_reverse
    }

    /// Arcs of `u` in commodity `c`'s view, ordered by neighbour id.
    fn arcs<'s>(&'s self, c: &'s Commodity, u: NodeId) -> impl Iterator<Item = Adjacent> + 's {
        let pre = c.pre_source();
        let base: &[Adjacent] = if u == pre { &[] } else { self.net.adjacent(u) };
        let to_pre = (u == c.demand.source).then(|| c.pre_arc_from_source());
        let from_pre = (u == pre).then(|| c.pre_arc_to_source());
        base.iter().copied().chain(to_pre).chain(from_pre)
    }

    /// `c_i(u,v) = c(u,v) - L(u,v) + l_i(v,u)`, zero for unrelated pairs.
    pub fn residual_capacity_locked(&self, i: CommodityId, u: NodeId, v: NodeId) -> Result<Amount, LockingError> {
        let c = self.commodity(i)?;
        Ok(self.arc(c, u, v).map(|a| self.residual_along(c, a)).unwrap_or(Amount::ZERO))
    }

    /// The residual capacity commodity `i` would see without locking,
    /// `c(u,v) - F(u,v)` with `F` the summed flow of all commodities.
    pub fn residual_capacity_unlocked(&self, i: CommodityId, u: NodeId, v: NodeId) -> Result<Amount, LockingError> {
        let c = self.commodity(i)?;
        let Some(a) = self.arc(c, u, v) else {
            return Ok(Amount::ZERO);
        };
        if a.pair == c.pre_pair() {
            return Ok(self.residual_along(c, a));
        }
        let total: Amount = self.commodities.iter().map(|c| c.flow.along(a)).sum();
        Ok(self.net.pair_capacity(a.pair, a.forward) - total)
    }

    /// `f_i(u, v)`
    pub fn flow(&self, i: CommodityId, u: NodeId, v: NodeId) -> Result<Amount, LockingError> {
        let c = self.commodity(i)?;
        Ok(self.arc(c, u, v).map(|a| c.flow.along(a)).unwrap_or(Amount::ZERO))
    }

    /// `F(u,v) = Σ_i f_i(u,v)` over the real channels.
    pub fn total_flow(&self, u: NodeId, v: NodeId) -> Amount {
        match self.net.find_adjacent(u, v) {
            Some(a) => self.commodities.iter().map(|c| c.flow.along(a)).sum(),
            None => Amount::ZERO,
        }
    }

    /// `L(u,v)` over the real channels.
    pub fn total_locked(&self, u: NodeId, v: NodeId) -> Amount {
        self.net
            .find_adjacent(u, v)
            .map(|a| self.locks.total(a.pair, a.forward))
            .unwrap_or(Amount::ZERO)
    }

    fn op_err(i: CommodityId, source: SolverError) -> LockingError {
        LockingError::Operation { commodity: i.0, source }
    }

    /// Locked push of `min(x_i(u), c_i(u,v))` from `u` to `v`. Requires
    /// `x_i(u) > 0`, `c_i(u,v) > 0` and `h_i(u) > h_i(v)`.
    pub fn locked_push(&mut self, i: CommodityId, u: NodeId, v: NodeId) -> Result<Amount, LockingError> {
        self.locked_push_limited(i, u, v, Amount::MAX)
    }

    /// [`Self::locked_push`] moving at most `limit`.
    pub fn locked_push_limited(
        &mut self,
        i: CommodityId,
        u: NodeId,
        v: NodeId,
        limit: Amount,
    ) -> Result<Amount, LockingError> {
        let reject = |reason| Self::op_err(i, SolverError::PushNotAdmissible { from: u, to: v, reason });
        let c = self.commodity(i)?;
        let a = self.arc(c, u, v).ok_or_else(|| reject("no channel"))?;
        let excess = c.excess(u);
        if !excess.is_positive() {
            return Err(reject("no excess"));
        }
        let residual = self.residual_along(c, a);
        if !residual.is_positive() {
            return Err(reject("no locked residual capacity"));
        }
        if c.heights.get(u) <= c.heights.get(v) {
            return Err(reject("target is not lower"));
        }
        if !limit.is_positive() {
            return Err(reject("non-positive limit"));
        }
        let delta = excess.min(residual).min(limit);
        self.apply_push(i, u, a, delta);
        Ok(delta)
    }

    fn apply_push(&mut self, i: CommodityId, u: NodeId, a: Adjacent, delta: Amount) {
        let c = &mut self.commodities[i.0];
        let old = c.flow.pair_flow(a.pair);
        c.flow.push_on(u, a, delta);
        let new = c.flow.pair_flow(a.pair);
        if a.pair.0 < self.net.pair_count() {
            self.locks.update(a.pair, old, new);
        }
    }

    /// Lowest height among `u`'s residual neighbours, or an error if a
    /// lower residual neighbour exists (a push is admissible).
    fn lowest_residual_neighbour(&self, c: &Commodity, u: NodeId) -> Result<u32, SolverError> {
        let reject = |reason| SolverError::RelabelNotAllowed { node: u, reason };
        if u == c.pre_source() || u == c.demand.sink {
            return Err(reject("terminals keep fixed heights"));
        }
        if !c.excess(u).is_positive() {
            return Err(reject("no excess"));
        }
        let hu = c.heights.get(u);
        let mut lowest: Option<u32> = None;
        for a in self.arcs(c, u) {
            if !self.residual_along(c, a).is_positive() {
                continue;
            }
            let hv = c.heights.get(a.node);
            if hu > hv {
                return Err(reject("an admissible push exists"));
            }
            lowest = Some(lowest.map_or(hv, |m| m.min(hv)));
        }
        lowest.ok_or(SolverError::NoResidualEdge(u))
    }

    /// `h_i(u) := 1 + min(h_i(v) : (u,v) ∈ E_i)`. Refused when a locked push
    /// is admissible or when the new height would exceed
    /// [`Self::height_bound`].
    pub fn relabel_commodity(&mut self, i: CommodityId, u: NodeId) -> Result<u32, LockingError> {
        let c = self.commodity(i)?;
        let new_height = 1 + self.lowest_residual_neighbour(c, u).map_err(|e| Self::op_err(i, e))?;
        if new_height > self.height_bound() {
            return Err(Self::op_err(
                i,
                SolverError::RelabelNotAllowed { node: u, reason: "height bound reached" },
            ));
        }
        self.commodities[i.0].heights.set(u, new_height);
        Ok(new_height)
    }

    /// Relabel to a given height, as decided by a node with a possibly
    /// stale view. Valid when the relabel preconditions hold and
    /// `h_i(u) < height <= 1 + min(h_i(v) : (u,v) ∈ E_i)`.
    pub fn relabel_commodity_to(&mut self, i: CommodityId, u: NodeId, height: u32) -> Result<(), LockingError> {
        let c = self.commodity(i)?;
        let lowest = self.lowest_residual_neighbour(c, u).map_err(|e| Self::op_err(i, e))?;
        if height <= c.heights.get(u) || height > lowest + 1 || height > self.height_bound() {
            return Err(Self::op_err(
                i,
                SolverError::RelabelNotAllowed { node: u, reason: "target height out of range" },
            ));
        }
        self.commodities[i.0].heights.set(u, height);
        Ok(())
    }

    /// First admissible push target of `u` for commodity `i`, lowest id
    /// first.
    fn first_admissible(&self, c: &Commodity, u: NodeId) -> Option<Adjacent> {
        let hu = c.heights.get(u);
        self.arcs(c, u)
            .find(|&a| hu > c.heights.get(a.node) && self.residual_along(c, a).is_positive())
    }

    fn has_applicable_op(&self, c: &Commodity, u: NodeId) -> bool {
        if !c.excess(u).is_positive() {
            return false;
        }
        if self.first_admissible(c, u).is_some() {
            return true;
        }
        matches!(self.lowest_residual_neighbour(c, u), Ok(h) if h < self.height_bound())
    }

    /// Raise-only global relabel of commodity `i`. Every real node gets
    /// `max(h_i(u), g(u))` where `g(u)` is the residual distance from `u`
    /// to `t_i`, or `|V| + 1` plus the residual distance to the pre-source
    /// when `t_i` is unreachable. Distances use edges with positive locked
    /// residual capacity. Terminals keep their heights. Returns the number
    /// of raised nodes.
    pub fn global_relabel(&mut self, i: CommodityId) -> Result<usize, LockingError> {
        let c = self.commodity(i)?;
        let n = self.net.node_count();
        let mut target: Vec<Option<u32>> = vec![None; n + 1];
        let sink = c.demand.sink;
        target[sink.0] = Some(0);
        self.backward_distances(c, &mut target, VecDeque::from([sink]));
        let source = c.demand.source;
        if target[source.0].is_none() && self.residual_along(c, c.pre_arc_from_source()).is_positive() {
            target[source.0] = Some(n as u32 + 2);
            self.backward_distances(c, &mut target, VecDeque::from([source]));
        }
        let heights = &mut self.commodities[i.0].heights;
        let mut raised = 0;
        for (u, g) in target.iter().enumerate().take(n) {
            if let Some(g) = *g {
                if g > heights.get(NodeId(u)) {
                    heights.set(NodeId(u), g);
                    raised += 1;
                }
            }
        }
        Ok(raised)
    }

    /// Breadth-first search against residual edges over real nodes,
    /// labelling each newly reached node one above its predecessor.
    fn backward_distances(&self, c: &Commodity, target: &mut [Option<u32>], mut queue: VecDeque<NodeId>) {
        while let Some(v) = queue.pop_front() {
            let dv = target[v.0].expect("queued nodes are labelled");
            for &back in self.net.adjacent(v) {
                let u = back.node;
                if target[u.0].is_some() {
                    continue;
                }
                let a = Adjacent { node: v, pair: back.pair, forward: !back.forward };
                if self.residual_along(c, a).is_positive() {
                    target[u.0] = Some(dv + 1);
                    queue.push_back(u);
                }
            }
        }
    }

    /// The channel graph after settling every commodity's current flow on
    /// the real channels: `c(u,v) - Σ_i f_i(u,v)` per edge.
    pub fn residual_network(&self) -> FlowNetwork {
        let mut residual = self.net.clone();
        for c in &self.commodities {
            residual.commit_flow(&c.restricted_flow(&self.net));
        }
        residual
    }

    /// Outcome of commodity `i` in the current state.
    pub fn outcome(&self, i: CommodityId) -> Result<Outcome, LockingError> {
        let c = self.commodity(i)?;
        let delivered = c.delivered();
        Ok(if delivered == c.demand.amount { Outcome::Success } else { Outcome::Infeasible(delivered) })
    }

    /// Drops all flow of commodity `i`, including the pre-source edge, and
    /// releases its locks.
    pub fn rollback(&mut self, i: CommodityId) -> Result<(), LockingError> {
        self.commodity(i)?;
        let n = self.net.node_count();
        let pairs = self.net.pair_count();
        for p in 0..pairs {
            let old = self.commodities[i.0].flow.pair_flow(PairId(p));
            if !old.is_zero() {
                self.locks.update(PairId(p), old, Amount::ZERO);
            }
        }
        self.commodities[i.0].flow = FlowAssignment::with_sizes(n + 1, pairs + 1);
        Ok(())
    }

    /// Checks the total capacity constraint, the lock chain
    /// `Σ_i f_i <= L <= c`, the lock cache, skew symmetry and non-negative
    /// excess away from each commodity's pre-source.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let recomputed = LockTable::recompute(self.net.pair_count(), &self.commodities);
        for p in 0..self.net.pair_count() {
            let pair = PairId(p);
            let (lo, hi) = self.net.pair_endpoints(pair);
            for (forward, from, to) in [(true, lo, hi), (false, hi, lo)] {
                let cached = self.locks.total(pair, forward);
                let fresh = recomputed.total(pair, forward);
                if cached != fresh {
                    return Err(InvariantViolation::LockCache { from, to, cached, recomputed: fresh });
                }
                let a = Adjacent { node: to, pair, forward };
                let total: Amount = self.commodities.iter().map(|c| c.flow.along(a)).sum();
                let capacity = self.net.pair_capacity(pair, forward);
                if total > capacity {
                    return Err(InvariantViolation::TotalCapacity { from, to, total, capacity });
                }
                if total > fresh || fresh > capacity {
                    return Err(InvariantViolation::LockChain { from, to, total, locked: fresh, capacity });
                }
            }
        }
        for c in &self.commodities {
            self.check_commodity(c)?;
        }
        Ok(())
    }

    fn check_commodity(&self, c: &Commodity) -> Result<(), InvariantViolation> {
        let n = self.net.node_count();
        let mut excess = vec![Amount::ZERO; n + 1];
        for p in 0..self.net.pair_count() {
            let (lo, hi) = self.net.pair_endpoints(PairId(p));
            let fwd = self.flow(c.id, lo, hi).expect("commodity exists");
            let bwd = self.flow(c.id, hi, lo).expect("commodity exists");
            if fwd != -bwd {
                return Err(InvariantViolation::Skew { commodity: c.id, from: lo, to: hi });
            }
            excess[lo.0] -= fwd;
            excess[hi.0] += fwd;
        }
        let pre_flow = c.flow.along(c.pre_arc_to_source());
        if pre_flow.is_negative() || pre_flow > c.demand.amount {
            return Err(InvariantViolation::PreSourceFlow { commodity: c.id, flow: pre_flow });
        }
        excess[n] -= pre_flow;
        excess[c.demand.source.0] += pre_flow;
        for (node, &x) in excess.iter().enumerate() {
            let node = NodeId(node);
            if x != c.excess(node) {
                return Err(InvariantViolation::ExcessCache { commodity: c.id, node });
            }
            if node != c.pre_source() && x.is_negative() {
                return Err(InvariantViolation::NegativeExcess { commodity: c.id, node, excess: x });
            }
        }
        Ok(())
    }
}

/// An operation as it happened in some execution, to be re-applied in the
/// same order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ReplayOp {
    Push { commodity: CommodityId, from: NodeId, to: NodeId, amount: Amount },
    Relabel { commodity: CommodityId, node: NodeId, height: u32 },
    GlobalRelabel { commodity: CommodityId },
}

impl ReplayOp {
    pub fn commodity(&self) -> CommodityId {
        match *self {
            ReplayOp::Push { commodity, .. }
            | ReplayOp::Relabel { commodity, .. }
            | ReplayOp::GlobalRelabel { commodity } => commodity,
        }
    }
}

/// Order in which commodities take turns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scheduler {
    /// One operation per commodity per turn, cycling in id order.
    RoundRobin,
    /// Each turn goes to a uniformly chosen commodity with work left.
    Random { seed: u64 },
    /// Re-applies a recorded operation sequence, then continues
    /// round-robin until no commodity can make progress.
    Replay(Vec<ReplayOp>),
}

/// Final result of a concurrent run.
#[derive(Clone, Debug)]
pub struct ConcurrentOutcome {
    pub outcomes: Vec<Outcome>,
    /// `x_i(t_i)` at termination, before failed commodities were rolled back.
    pub delivered: Vec<Amount>,
    pub steps: u64,
    /// State after rolling back failed commodities.
    pub state: MultiCommodityState,
}

impl ConcurrentOutcome {
    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_success()).count()
    }
}

enum Turn {
    Op(ReplayOp),
    Parked,
    Idle,
}

/// Drives all commodities of a [`MultiCommodityState`] to quiescence.
#[derive(Clone, Debug)]
pub struct ConcurrentSolver {
    state: MultiCommodityState,
    queues: Vec<VecDeque<NodeId>>,
    queued: Vec<Vec<bool>>,
    parked: Vec<Vec<NodeId>>,
    steps: u64,
    budget: u64,
    global_relabel: bool,
    relabels_since_global: Vec<usize>,
}

impl ConcurrentSolver {
    pub fn new(net: &FlowNetwork, demands: &[Demand]) -> Result<Self, LockingError> {
        Ok(Self::from_state(MultiCommodityState::new(net, demands)?))
    }

    pub fn from_state(state: MultiCommodityState) -> Self {
        let k = state.commodities.len();
        let n = state.net.node_count() + 1;
        let mut solver = ConcurrentSolver {
            state,
            queues: vec![VecDeque::new(); k],
            queued: vec![vec![false; n]; k],
            parked: vec![Vec::new(); k],
            steps: 0,
            budget: DEFAULT_STEP_BUDGET,
            global_relabel: false,
            relabels_since_global: vec![0; k],
        };
        solver.rebuild_queues();
        solver
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Enables [`MultiCommodityState::global_relabel`] for every commodity
    /// before the first operation and again after every `|V|` relabels of
    /// that commodity. Off by default.
    pub fn with_global_relabel(mut self, enabled: bool) -> Self {
        self.global_relabel = enabled;
        self
    }

    pub fn state(&self) -> &MultiCommodityState {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn rebuild_queues(&mut self) {
        for i in 0..self.state.commodities.len() {
            self.queues[i].clear();
            self.queued[i].iter_mut().for_each(|q| *q = false);
            self.parked[i].clear();
            let nodes: Vec<NodeId> = (0..self.state.net.node_count()).map(NodeId).collect();
            for u in nodes {
                self.enqueue(i, u);
            }
        }
    }

    fn enqueue(&mut self, i: usize, u: NodeId) {
        let c = &self.state.commodities[i];
        if u == c.pre_source() || u == c.demand.sink || !c.excess(u).is_positive() || self.queued[i][u.0] {
            return;
        }
        self.queued[i][u.0] = true;
        self.queues[i].push_back(u);
    }

    fn pop_front(&mut self, i: usize) {
        if let Some(u) = self.queues[i].pop_front() {
            self.queued[i][u.0] = false;
        }
    }

    /// One push or relabel for commodity `i` on the node at the head of its
    /// FIFO queue. A node that can neither push nor relabel is parked.
    fn turn(&mut self, i: usize) -> Turn {
        let id = CommodityId(i);
        let u = loop {
            let Some(&u) = self.queues[i].front() else {
                return Turn::Idle;
            };
            if self.state.commodities[i].excess(u).is_positive() {
                break u;
            }
            self.pop_front(i);
        };
        let c = &self.state.commodities[i];
        let turn = if let Some(a) = self.state.first_admissible(c, u) {
            let amount = self.state.locked_push(id, u, a.node).expect("admissible locked push");
            self.enqueue(i, a.node);
            Turn::Op(ReplayOp::Push { commodity: id, from: u, to: a.node, amount })
        } else {
            match self.state.relabel_commodity(id, u) {
                Ok(height) => Turn::Op(ReplayOp::Relabel { commodity: id, node: u, height }),
                Err(_) => {
                    self.pop_front(i);
                    self.parked[i].push(u);
                    return Turn::Parked;
                }
            }
        };
        if !self.state.commodities[i].excess(u).is_positive() {
            self.pop_front(i);
        }
        turn
    }

    /// Re-queues parked nodes that gained an applicable operation because
    /// other commodities released capacity.
    fn revive_parked(&mut self) -> bool {
        let mut revived = false;
        for i in 0..self.parked.len() {
            let parked = std::mem::take(&mut self.parked[i]);
            for u in parked {
                let c = &self.state.commodities[i];
                if self.state.has_applicable_op(c, u) {
                    self.enqueue(i, u);
                    revived = true;
                } else if c.excess(u).is_positive() {
                    self.parked[i].push(u);
                }
            }
        }
        revived
    }

    fn run_global_relabel(
        &mut self,
        i: usize,
        observer: &mut impl FnMut(&MultiCommodityState, &ReplayOp),
    ) -> Result<(), LockingError> {
        let commodity = CommodityId(i);
        self.charge()?;
        self.state.global_relabel(commodity)?;
        self.relabels_since_global[i] = 0;
        observer(&self.state, &ReplayOp::GlobalRelabel { commodity });
        Ok(())
    }

    fn charge(&mut self) -> Result<(), LockingError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(LockingError::BudgetExhausted { budget: self.budget });
        }
        Ok(())
    }

    fn replay(
        &mut self,
        ops: &[ReplayOp],
        observer: &mut impl FnMut(&MultiCommodityState, &ReplayOp),
    ) -> Result<(), LockingError> {
        for (index, op) in ops.iter().enumerate() {
            self.charge()?;
            let mismatch = |e: LockingError| LockingError::ReplayMismatch { index, detail: e.to_string() };
            match *op {
                ReplayOp::Push { commodity, from, to, amount } => {
                    let moved = self.state.locked_push_limited(commodity, from, to, amount).map_err(mismatch)?;
                    if moved != amount {
                        return Err(LockingError::ReplayMismatch {
                            index,
                            detail: format!("moved {moved} instead of {amount}"),
                        });
                    }
                }
                ReplayOp::Relabel { commodity, node, height } => {
                    self.state.relabel_commodity_to(commodity, node, height).map_err(mismatch)?;
                }
                ReplayOp::GlobalRelabel { commodity } => {
                    self.state.global_relabel(commodity).map_err(mismatch)?;
                }
            }
            observer(&self.state, op);
        }
        self.rebuild_queues();
        Ok(())
    }

    /// Runs to quiescence, calling `observer` after every operation.
    pub fn run_with(
        &mut self,
        scheduler: &Scheduler,
        mut observer: impl FnMut(&MultiCommodityState, &ReplayOp),
    ) -> Result<(), LockingError> {
        let mut rng = match scheduler {
            Scheduler::Random { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        if let Scheduler::Replay(ops) = scheduler {
            self.replay(ops, &mut observer)?;
        } else if self.global_relabel && self.steps == 0 {
            for i in 0..self.state.commodities.len() {
                self.run_global_relabel(i, &mut observer)?;
            }
        }
        loop {
            let mut live: VecDeque<usize> =
                (0..self.queues.len()).filter(|&i| !self.queues[i].is_empty()).collect();
            while !live.is_empty() {
                let slot = match rng.as_mut() {
                    Some(rng) => rng.gen_range(0..live.len()),
                    None => 0,
                };
                let i = live[slot];
                match self.turn(i) {
                    Turn::Op(op) => {
                        self.charge()?;
                        observer(&self.state, &op);
                        if let ReplayOp::Relabel { .. } = op {
                            self.relabels_since_global[i] += 1;
                            if self.global_relabel && self.relabels_since_global[i] >= self.state.net.node_count() {
                                self.run_global_relabel(i, &mut observer)?;
                            }
                        }
                        if rng.is_none() {
                            live.pop_front();
                            live.push_back(i);
                        }
                    }
                    Turn::Parked => self.charge()?,
                    Turn::Idle => {
                        live.remove(slot);
                    }
                }
            }
            if !self.revive_parked() {
                return Ok(());
            }
        }
    }

    /// Runs to quiescence, then rolls back every commodity that did not
    /// deliver its full demand.
    pub fn solve(self, scheduler: &Scheduler) -> Result<ConcurrentOutcome, LockingError> {
        self.solve_with(scheduler, |_, _| {})
    }

    pub fn solve_with(
        mut self,
        scheduler: &Scheduler,
        observer: impl FnMut(&MultiCommodityState, &ReplayOp),
    ) -> Result<ConcurrentOutcome, LockingError> {
        self.run_with(scheduler, observer)?;
        let k = self.state.commodities.len();
        let delivered: Vec<Amount> = self.state.commodities.iter().map(Commodity::delivered).collect();
        let mut outcomes = Vec::with_capacity(k);
        for i in 0..k {
            let outcome = self.state.outcome(CommodityId(i))?;
            if !outcome.is_success() {
                self.state.rollback(CommodityId(i))?;
            }
            outcomes.push(outcome);
        }
        Ok(ConcurrentOutcome { outcomes, delivered, steps: self.steps, state: self.state })
    }
}

/// Routes all demands concurrently with capacity locking.
pub fn concurrent_solve(
    net: &FlowNetwork,
    demands: &[Demand],
    scheduler: &Scheduler,
) -> Result<ConcurrentOutcome, LockingError> {
    ConcurrentSolver::new(net, demands)?.solve(scheduler)
}
