//! Message-passing simulation of concurrent locked push-relabel.
//!
//! Every node is an actor holding only its own heights and excesses, its
//! view of each adjacent channel and the last heights it heard from its
//! neighbours. Actors talk to neighbours only, through a discrete-event
//! queue with per-message latency. A push is a two-message exchange: the
//! sender reserves excess and sends a request quoting its height, the
//! receiver commits what it can and answers with an accept or a reject.
//!
//! Every committed push and relabel is recorded as a [`ReplayOp`] in the
//! order it happened, so a run can be checked against the centralised
//! solver with [`Scheduler::Replay`](crate::locking::Scheduler::Replay).

mod actor;
mod events;
mod message;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub use actor::{LocalChannel, NodeActor, Reaction};
pub use events::{EventQueue, LatencyModel, Scheduled, DEFAULT_MAX_DELAY};
pub use message::{Message, Payload, Termination};

use crate::amount::Amount;
use crate::error::SimError;
use crate::flow::{Demand, Outcome};
use crate::locking::{CommodityId, MultiCommodityState, ReplayOp};
use crate::network::{FlowNetwork, NodeId, PairId};

pub const DEFAULT_EVENT_BUDGET: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub latency: LatencyModel,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub max_events: u64,
    /// Rebuild the global state after every event and check the locking
    /// invariants and height monotonicity. Costly.
    #[serde(default)]
    pub check_invariants: bool,
    #[serde(default)]
    pub record_trace: bool,
}

fn default_budget() -> u64 {
    DEFAULT_EVENT_BUDGET
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            latency: LatencyModel::default(),
            seed: 0,
            max_events: DEFAULT_EVENT_BUDGET,
            check_invariants: false,
            record_trace: false,
        }
    }
}

impl SimConfig {
    pub fn zero_latency() -> Self {
        SimConfig { latency: LatencyModel::Zero, ..Self::default() }
    }
}

/// One delivered message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: u64,
    pub seq: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub message: Payload,
    /// Hash of the receiver's state after handling the message.
    pub digest: u64,
}

pub fn write_trace(trace: &[TraceEvent], mut out: impl Write) -> io::Result<()> {
    for event in trace {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    /// Per commodity, from the state at quiescence.
    pub outcomes: Vec<Outcome>,
    /// `x_i(t_i)` at quiescence, before failed commodities were rolled back.
    pub delivered: Vec<Amount>,
    /// What each source decided inside the protocol, if it could.
    pub decisions: Vec<Option<Outcome>>,
    pub replay: Vec<ReplayOp>,
    pub messages: u64,
    pub end_time: u64,
    /// Global state after rolling back failed commodities.
    pub state: MultiCommodityState,
    pub trace: Vec<TraceEvent>,
}

impl SimOutcome {
    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_success()).count()
    }
}

/// Actors plus the event queue.
#[derive(Clone, Debug)]
pub struct Simulation {
    net: FlowNetwork,
    demands: Vec<Demand>,
    actors: Vec<NodeActor>,
    queue: EventQueue,
    config: SimConfig,
    now: u64,
    messages: u64,
    replay: Vec<ReplayOp>,
    trace: Vec<TraceEvent>,
    last_heights: Vec<Vec<u32>>,
}

impl Simulation {
    pub fn new(net: &FlowNetwork, demands: &[Demand], config: SimConfig) -> Result<Self, SimError> {
        // validates the demands
        MultiCommodityState::new(net, demands)?;
        let actors = net.nodes().map(|u| NodeActor::new(net, demands, u)).collect();
        let mut sim = Simulation {
            net: net.clone(),
            demands: demands.to_vec(),
            actors,
            queue: EventQueue::new(config.latency, config.seed),
            config,
            now: 0,
            messages: 0,
            replay: Vec::new(),
            trace: Vec::new(),
            last_heights: Vec::new(),
        };
        for u in 0..sim.actors.len() {
            let r = sim.actors[u].start();
            sim.absorb(NodeId(u), r)?;
        }
        if sim.config.check_invariants {
            sim.check_event()?;
        }
        Ok(sim)
    }

    pub fn actors(&self) -> &[NodeActor] {
        &self.actors
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn pending_messages(&self) -> usize {
        self.queue.len()
    }

    pub fn replay(&self) -> &[ReplayOp] {
        &self.replay
    }

    fn absorb(&mut self, from: NodeId, r: Reaction) -> Result<(), SimError> {
        self.replay.extend(r.ops);
        for m in r.messages {
            if m.src != from || !self.net.has_edge(m.src, m.dst) && !self.net.has_edge(m.dst, m.src) {
                return Err(SimError::Protocol { node: from, detail: format!("sent a message {} -> {}", m.src, m.dst) });
            }
            self.queue.send(self.now, m);
        }
        Ok(())
    }

    /// Delivers the next message. Returns false at quiescence.
    pub fn step(&mut self) -> Result<bool, SimError> {
        let Some(event) = self.queue.pop() else {
            return Ok(false);
        };
        self.messages += 1;
        if self.messages > self.config.max_events {
            return Err(SimError::BudgetExhausted { budget: self.config.max_events });
        }
        self.now = event.time;
        let dst = event.message.dst;
        let r = self.actors[dst.0].handle(&event.message)?;
        self.absorb(dst, r)?;
        if self.config.record_trace {
            let mut hasher = DefaultHasher::new();
            self.actors[dst.0].hash(&mut hasher);
            self.trace.push(TraceEvent {
                time: event.time,
                seq: event.seq,
                src: event.message.src,
                dst,
                message: event.message.payload,
                digest: hasher.finish(),
            });
        }
        if self.config.check_invariants {
            self.check_event()?;
        }
        Ok(true)
    }

    fn check_event(&mut self) -> Result<(), SimError> {
        let event = self.messages;
        let state = self.global_state()?;
        state.check_invariants().map_err(|v| SimError::Invariant { event, detail: v.to_string() })?;
        let heights: Vec<Vec<u32>> =
            state.commodities().iter().map(|c| c.heights().as_slice().to_vec()).collect();
        if !self.last_heights.is_empty() {
            for (i, (old, new)) in self.last_heights.iter().zip(&heights).enumerate() {
                if let Some(u) = (0..old.len()).find(|&u| new[u] < old[u]) {
                    return Err(SimError::Invariant {
                        event,
                        detail: format!("height of node {u} for commodity {i} dropped from {} to {}", old[u], new[u]),
                    });
                }
            }
        }
        self.last_heights = heights;
        Ok(())
    }

    /// The state all committed operations amount to. Flow on a channel is
    /// what its receiving end committed, so in-flight accepts are already
    /// counted.
    pub fn global_state(&self) -> Result<MultiCommodityState, SimError> {
        let n = self.net.node_count();
        let pairs = self.net.pair_count();
        let mut flows = Vec::with_capacity(self.demands.len());
        let mut heights = Vec::with_capacity(self.demands.len());
        for (i, d) in self.demands.iter().enumerate() {
            let i = CommodityId(i);
            let mut flow = Vec::with_capacity(pairs + 1);
            for p in 0..pairs {
                let (lo, hi) = self.net.pair_endpoints(PairId(p));
                let into_hi = self.actors[hi.0].channel(lo).expect("pair endpoints are adjacent").received(i);
                let into_lo = self.actors[lo.0].channel(hi).expect("pair endpoints are adjacent").received(i);
                flow.push(into_hi - into_lo);
            }
            flow.push(-self.actors[d.source.0].pre_flow(i));
            flows.push(flow);
            let mut h: Vec<u32> = self.actors.iter().map(|a| a.height(i)).collect();
            h.push(n as u32 + 1);
            heights.push(h);
        }
        Ok(MultiCommodityState::from_parts(&self.net, &self.demands, flows, heights)?)
    }

    /// Both ends of every channel agree on every commodity's flow and no
    /// reservation is left.
    pub fn check_agreement(&self) -> Result<(), SimError> {
        for a in &self.actors {
            for ch in a.channels() {
                let b = self.actors[ch.peer().0].channel(a.id()).expect("channels are symmetric");
                for i in (0..self.demands.len()).map(CommodityId) {
                    if ch.sent(i) != b.received(i) || ch.pending(i).is_positive() {
                        return Err(SimError::Protocol {
                            node: a.id(),
                            detail: format!(
                                "channel to {} disagrees for commodity {i}: sent {} received {} pending {}",
                                ch.peer(),
                                ch.sent(i),
                                b.received(i),
                                ch.pending(i)
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Runs to quiescence, then rolls back failed commodities.
    pub fn run(mut self) -> Result<SimOutcome, SimError> {
        while self.step()? {}
        self.check_agreement()?;
        let mut state = self.global_state()?;
        let k = self.demands.len();
        let mut outcomes = Vec::with_capacity(k);
        let mut delivered = Vec::with_capacity(k);
        for i in (0..k).map(CommodityId) {
            delivered.push(state.commodity(i)?.delivered());
            let outcome = state.outcome(i)?;
            if !outcome.is_success() {
                state.rollback(i)?;
            }
            outcomes.push(outcome);
        }
        let decisions =
            self.demands.iter().enumerate().map(|(i, d)| self.actors[d.source.0].decision(CommodityId(i))).collect();
        Ok(SimOutcome {
            outcomes,
            delivered,
            decisions,
            replay: self.replay,
            messages: self.messages,
            end_time: self.now,
            state,
            trace: self.trace,
        })
    }
}

/// Simulates all demands concurrently over the message-passing protocol.
pub fn run_simulation(net: &FlowNetwork, demands: &[Demand], config: &SimConfig) -> Result<SimOutcome, SimError> {
    Simulation::new(net, demands, config.clone())?.run()
}
