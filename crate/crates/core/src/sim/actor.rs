use crate::amount::Amount;
use crate::error::SimError;
use crate::flow::{Demand, Outcome};
use crate::locking::{CommodityId, ReplayOp};
use crate::network::{FlowNetwork, NodeId};

use super::message::{Message, Payload, Termination};

/// One node's view of a channel to a neighbour, per commodity.
///
/// `received` is exact: it counts what this node itself committed as a
/// receiver. `sent` only grows when the neighbour's accept arrives, so while
/// an accept is in flight the local view `sent - received` of
/// `f_i(self, peer)` lags behind the true flow.
#[derive(Clone, Debug, Hash)]
pub struct LocalChannel {
    peer: NodeId,
    cap_out: Amount,
    cap_in: Amount,
    sent: Vec<Amount>,
    received: Vec<Amount>,
    /// Amount reserved for an outstanding request, zero if none.
    pending: Vec<Amount>,
    peer_height: Vec<u32>,
    /// `Σ_j max(0, view_j)` and `Σ_j max(0, -view_j)`.
    lock_out: Amount,
    lock_in: Amount,
}

impl LocalChannel {
    fn new(peer: NodeId, cap_out: Amount, cap_in: Amount, k: usize) -> Self {
        LocalChannel {
            peer,
            cap_out,
            cap_in,
            sent: vec![Amount::ZERO; k],
            received: vec![Amount::ZERO; k],
            pending: vec![Amount::ZERO; k],
            peer_height: vec![0; k],
            lock_out: Amount::ZERO,
            lock_in: Amount::ZERO,
        }
    }

    pub fn peer(&self) -> NodeId {
        self.peer
    }

    pub fn sent(&self, i: CommodityId) -> Amount {
        self.sent[i.0]
    }

    pub fn received(&self, i: CommodityId) -> Amount {
        self.received[i.0]
    }

    pub fn pending(&self, i: CommodityId) -> Amount {
        self.pending[i.0]
    }

    /// Last height of the peer this node heard of. Never above the true one.
    pub fn peer_height(&self, i: CommodityId) -> u32 {
        self.peer_height[i.0]
    }

    /// Local view of `f_i(self, peer)`.
    pub fn view(&self, i: CommodityId) -> Amount {
        self.sent[i.0] - self.received[i.0]
    }

    /// Estimate of `c_i(self, peer)`. When this node has no request of
    /// commodity `i` outstanding it is never below the true value.
    pub fn residual_out(&self, i: CommodityId) -> Amount {
        self.cap_out - self.lock_out + (-self.view(i)).positive_part()
    }

    /// Estimate of `c_i(peer, self)`; never above the true value.
    pub fn residual_in(&self, i: CommodityId) -> Amount {
        self.cap_in - self.lock_in + self.view(i).positive_part()
    }

    fn adjust(&mut self, i: CommodityId, sent: Amount, received: Amount) {
        let old = self.view(i);
        self.sent[i.0] += sent;
        self.received[i.0] += received;
        let new = self.view(i);
        self.lock_out += new.positive_part() - old.positive_part();
        self.lock_in += (-new).positive_part() - (-old).positive_part();
    }
}

/// Messages to send and operations committed while handling one event.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Reaction {
    pub messages: Vec<Message>,
    pub ops: Vec<ReplayOp>,
}

/// A node running the locked push-relabel protocol on local state only.
///
/// A node relabels commodity `i` only while it has no request of `i`
/// outstanding, so the height quoted in a request stays valid until the
/// reply arrives. Receivers decide how much to accept from their own view
/// of the channel, which never overestimates the locked residual capacity.
#[derive(Clone, Debug, Hash)]
pub struct NodeActor {
    id: NodeId,
    node_count: usize,
    demands: Vec<Demand>,
    channels: Vec<LocalChannel>,
    heights: Vec<u32>,
    excess: Vec<Amount>,
    reserved: Vec<Amount>,
    /// `f_i(s_i', s_i)` for commodities sourced here.
    pre_flow: Vec<Amount>,
    /// Highest sink report seen.
    reported: Vec<Amount>,
    decided: Vec<Option<Outcome>>,
}

impl NodeActor {
    pub fn new(net: &FlowNetwork, demands: &[Demand], id: NodeId) -> Self {
        let k = demands.len();
        let channels = net
            .adjacent(id)
            .iter()
            .map(|a| LocalChannel::new(a.node, net.capacity(id, a.node), net.capacity(a.node, id), k))
            .collect();
        let pre_flow: Vec<Amount> =
            demands.iter().map(|d| if d.source == id { d.amount } else { Amount::ZERO }).collect();
        NodeActor {
            id,
            node_count: net.node_count(),
            demands: demands.to_vec(),
            channels,
            heights: vec![0; k],
            excess: pre_flow.clone(),
            reserved: vec![Amount::ZERO; k],
            pre_flow,
            reported: vec![Amount::ZERO; k],
            decided: vec![None; k],
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn channels(&self) -> &[LocalChannel] {
        &self.channels
    }

    pub fn channel(&self, peer: NodeId) -> Option<&LocalChannel> {
        self.channel_index(peer).map(|c| &self.channels[c])
    }

    pub fn height(&self, i: CommodityId) -> u32 {
        self.heights[i.0]
    }

    /// Local excess: receipts minus confirmed sends.
    pub fn excess(&self, i: CommodityId) -> Amount {
        self.excess[i.0]
    }

    /// Excess not reserved for outstanding requests.
    pub fn available(&self, i: CommodityId) -> Amount {
        self.excess[i.0] - self.reserved[i.0]
    }

    pub fn pre_flow(&self, i: CommodityId) -> Amount {
        self.pre_flow[i.0]
    }

    pub fn decision(&self, i: CommodityId) -> Option<Outcome> {
        self.decided[i.0]
    }

    fn channel_index(&self, peer: NodeId) -> Option<usize> {
        self.channels.binary_search_by_key(&peer, |ch| ch.peer).ok()
    }

    fn protocol(&self, detail: impl Into<String>) -> SimError {
        SimError::Protocol { node: self.id, detail: detail.into() }
    }

    fn pre_source(&self) -> NodeId {
        NodeId(self.node_count)
    }

    fn height_bound(&self) -> u32 {
        2 * (self.node_count as u32 + 1)
    }

    /// Initial actions: sources with positive demand start pushing, zero
    /// demands are decided on the spot.
    pub fn start(&mut self) -> Reaction {
        let mut r = Reaction::default();
        for i in 0..self.demands.len() {
            self.try_decide(CommodityId(i), &mut r);
        }
        self.act(&mut r);
        r
    }

    /// Dispatches a delivered message.
    pub fn handle(&mut self, msg: &Message) -> Result<Reaction, SimError> {
        if msg.dst != self.id {
            return Err(self.protocol(format!("message for {} delivered here", msg.dst)));
        }
        if self.channel_index(msg.src).is_none() {
            return Err(self.protocol(format!("message from non-neighbour {}", msg.src)));
        }
        if msg.payload.commodity().0 >= self.demands.len() {
            return Err(self.protocol(format!("unknown commodity {}", msg.payload.commodity())));
        }
        match msg.payload {
            Payload::PushRequest { .. } => self.handle_push_request(msg),
            Payload::PushAccept { .. } | Payload::PushReject { .. } => self.handle_push_reply(msg),
            Payload::HeightUpdate { commodity, height } => {
                let c = self.channel_index(msg.src).expect("checked above");
                let known = &mut self.channels[c].peer_height[commodity.0];
                *known = (*known).max(height);
                let mut r = Reaction::default();
                self.act_commodity(commodity, &mut r);
                Ok(r)
            }
            Payload::Commit { commodity, info } => Ok(self.handle_commit(msg.src, commodity, info)),
        }
    }

    /// Reserves `min(available, residual)` for a request to `peer`, if the
    /// peer is believed lower and no request of `i` to it is outstanding.
    pub fn propose_push(&mut self, i: CommodityId, peer: NodeId) -> Option<Message> {
        let c = self.channel_index(peer)?;
        self.propose_at(i, c)
    }

    fn propose_at(&mut self, i: CommodityId, c: usize) -> Option<Message> {
        let available = self.available(i);
        let h = self.heights[i.0];
        let ch = &mut self.channels[c];
        if ch.pending[i.0].is_positive() || ch.peer_height[i.0] >= h {
            return None;
        }
        let amount = available.min(ch.residual_out(i));
        if !amount.is_positive() {
            return None;
        }
        ch.pending[i.0] = amount;
        self.reserved[i.0] += amount;
        Some(Message {
            src: self.id,
            dst: ch.peer,
            payload: Payload::PushRequest { commodity: i, amount, sender_height: h },
        })
    }

    /// Accepts `min(requested, residual_in)` when this node is lower than
    /// the quoted sender height, otherwise rejects with its own height. The
    /// reply is the first message of the reaction.
    pub fn handle_push_request(&mut self, msg: &Message) -> Result<Reaction, SimError> {
        let Payload::PushRequest { commodity: i, amount, sender_height } = msg.payload else {
            return Err(self.protocol("not a push request"));
        };
        if !amount.is_positive() {
            return Err(self.protocol(format!("request for non-positive amount {amount}")));
        }
        let c = self.channel_index(msg.src).ok_or_else(|| self.protocol("request from non-neighbour"))?;
        let h = self.heights[i.0];
        let accepted = if h < sender_height { amount.min(self.channels[c].residual_in(i)) } else { Amount::ZERO };
        let mut r = Reaction::default();
        if !accepted.is_positive() {
            r.messages.push(Message { src: self.id, dst: msg.src, payload: Payload::PushReject { commodity: i, height: h } });
            return Ok(r);
        }
        self.channels[c].adjust(i, Amount::ZERO, accepted);
        self.excess[i.0] += accepted;
        r.ops.push(ReplayOp::Push { commodity: i, from: msg.src, to: self.id, amount: accepted });
        r.messages.push(Message { src: self.id, dst: msg.src, payload: Payload::PushAccept { commodity: i, amount: accepted } });
        if self.demands[i.0].sink == self.id {
            self.reported[i.0] = self.excess[i.0];
            self.flood(&mut r, i, Termination::SinkReport { delivered: self.excess[i.0] }, None);
        }
        // the receipt may have released lock capacity used by any commodity
        self.act(&mut r);
        Ok(r)
    }

    /// Settles an outstanding request: commits the accepted amount or
    /// learns the receiver's height, then releases the reservation.
    pub fn handle_push_reply(&mut self, msg: &Message) -> Result<Reaction, SimError> {
        let c = self.channel_index(msg.src).ok_or_else(|| self.protocol("reply from non-neighbour"))?;
        let i = msg.payload.commodity();
        let pending = self.channels[c].pending[i.0];
        if !pending.is_positive() {
            return Err(self.protocol(format!("unsolicited reply from {}", msg.src)));
        }
        match msg.payload {
            Payload::PushAccept { amount, .. } => {
                if !amount.is_positive() || amount > pending {
                    return Err(self.protocol(format!("accepted {amount} of a {pending} request")));
                }
                self.channels[c].adjust(i, amount, Amount::ZERO);
                self.excess[i.0] -= amount;
            }
            Payload::PushReject { height, .. } => {
                let known = &mut self.channels[c].peer_height[i.0];
                *known = (*known).max(height);
            }
            _ => return Err(self.protocol("not a push reply")),
        }
        self.channels[c].pending[i.0] = Amount::ZERO;
        self.reserved[i.0] -= pending;
        let mut r = Reaction::default();
        self.act_commodity(i, &mut r);
        Ok(r)
    }

    fn handle_commit(&mut self, from: NodeId, i: CommodityId, info: Termination) -> Reaction {
        let mut r = Reaction::default();
        match info {
            Termination::SinkReport { delivered } => {
                if delivered > self.reported[i.0] {
                    self.reported[i.0] = delivered;
                    self.flood(&mut r, i, info, Some(from));
                    self.try_decide(i, &mut r);
                }
            }
            Termination::Decided { outcome } => {
                if self.decided[i.0].is_none() {
                    self.decided[i.0] = Some(outcome);
                    self.flood(&mut r, i, info, Some(from));
                }
            }
        }
        r
    }

    fn flood(&self, r: &mut Reaction, i: CommodityId, info: Termination, except: Option<NodeId>) {
        for ch in &self.channels {
            if Some(ch.peer) != except {
                r.messages.push(Message { src: self.id, dst: ch.peer, payload: Payload::Commit { commodity: i, info } });
            }
        }
    }

    /// At the source: once every unit is either reported delivered or back
    /// at the pre-source, nothing of `i` is left in the network and the
    /// outcome is final.
    fn try_decide(&mut self, i: CommodityId, r: &mut Reaction) {
        let d = self.demands[i.0];
        if d.source != self.id || self.decided[i.0].is_some() || self.reported[i.0] != self.pre_flow[i.0] {
            return;
        }
        let delivered = self.reported[i.0];
        let outcome = if delivered == d.amount { Outcome::Success } else { Outcome::Infeasible(delivered) };
        self.decided[i.0] = Some(outcome);
        if d.amount.is_positive() {
            self.flood(r, i, Termination::Decided { outcome }, None);
        }
    }

    fn act(&mut self, r: &mut Reaction) {
        for i in 0..self.demands.len() {
            self.act_commodity(CommodityId(i), r);
        }
    }

    /// Requests pushes to every neighbour believed lower, returns excess to
    /// the pre-source when possible and relabels once nothing is
    /// outstanding and no target is left.
    fn act_commodity(&mut self, i: CommodityId, r: &mut Reaction) {
        if self.demands[i.0].sink == self.id {
            return;
        }
        loop {
            for c in 0..self.channels.len() {
                if !self.available(i).is_positive() {
                    break;
                }
                if let Some(m) = self.propose_at(i, c) {
                    r.messages.push(m);
                }
            }
            self.push_to_pre_source(i, r);
            if !self.available(i).is_positive() || self.reserved[i.0].is_positive() {
                return;
            }
            match self.relabel_target(i) {
                Some(h) if h <= self.height_bound() => {
                    self.heights[i.0] = h;
                    r.ops.push(ReplayOp::Relabel { commodity: i, node: self.id, height: h });
                    for ch in &self.channels {
                        r.messages.push(Message {
                            src: self.id,
                            dst: ch.peer,
                            payload: Payload::HeightUpdate { commodity: i, height: h },
                        });
                    }
                }
                _ => return,
            }
        }
    }

    fn push_to_pre_source(&mut self, i: CommodityId, r: &mut Reaction) {
        if self.demands[i.0].source != self.id || self.heights[i.0] <= self.node_count as u32 + 1 {
            return;
        }
        let amount = self.available(i).min(self.pre_flow[i.0]);
        if !amount.is_positive() {
            return;
        }
        self.pre_flow[i.0] -= amount;
        self.excess[i.0] -= amount;
        r.ops.push(ReplayOp::Push { commodity: i, from: self.id, to: self.pre_source(), amount });
        self.try_decide(i, r);
    }

    fn relabel_target(&self, i: CommodityId) -> Option<u32> {
        let to_pre = (self.demands[i.0].source == self.id && self.pre_flow[i.0].is_positive())
            .then_some(self.node_count as u32 + 1);
        self.channels
            .iter()
            .filter(|ch| ch.residual_out(i).is_positive())
            .map(|ch| ch.peer_height[i.0])
            .chain(to_pre)
            .min()
            .map(|h| h + 1)
    }
}
