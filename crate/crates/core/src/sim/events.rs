use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::NodeId;

use super::message::Message;

pub const DEFAULT_MAX_DELAY: u64 = 10;

/// Per-message delivery delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatencyModel {
    /// Every message arrives at time 0, in send order.
    Zero,
    /// Integer delay uniform on `[1, max_delay]`.
    Uniform { max_delay: u64 },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Uniform { max_delay: DEFAULT_MAX_DELAY }
    }
}

/// A message with its delivery slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scheduled {
    pub time: u64,
    /// Global send counter; breaks ties between equal delivery times.
    pub seq: u64,
    pub message: Message,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap pops the maximum
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pending messages ordered by `(time, seq)`. Messages between the same
/// ordered pair of nodes are delivered in send order.
#[derive(Clone, Debug)]
pub struct EventQueue {
    heap: BinaryHeap<Scheduled>,
    next_seq: u64,
    last_delivery: HashMap<(NodeId, NodeId), u64>,
    latency: LatencyModel,
    rng: ChaCha8Rng,
}

impl EventQueue {
    pub fn new(latency: LatencyModel, seed: u64) -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            last_delivery: HashMap::new(),
            latency,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `message`, sent at time `now`.
    pub fn send(&mut self, now: u64, message: Message) -> Scheduled {
        let delay = match self.latency {
            LatencyModel::Zero => 0,
            LatencyModel::Uniform { max_delay: 0 } => 0,
            LatencyModel::Uniform { max_delay } => self.rng.gen_range(1..=max_delay),
        };
        let last = self.last_delivery.entry((message.src, message.dst)).or_insert(0);
        let time = (now + delay).max(*last);
        *last = time;
        let event = Scheduled { time, seq: self.next_seq, message };
        self.next_seq += 1;
        self.heap.push(event);
        event
    }

    pub fn pop(&mut self) -> Option<Scheduled> {
        self.heap.pop()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locking::CommodityId;
    use crate::sim::message::Payload;

    fn msg(src: usize, dst: usize, height: u32) -> Message {
        Message { src: NodeId(src), dst: NodeId(dst), payload: Payload::HeightUpdate { commodity: CommodityId(0), height } }
    }

    #[test]
    fn zero_latency_is_global_fifo() {
        let mut q = EventQueue::new(LatencyModel::Zero, 0);
        for h in 0..5 {
            q.send(0, msg(h as usize % 2, 2, h));
        }
        let order: Vec<u32> = std::iter::from_fn(|| q.pop())
            .map(|e| match e.message.payload {
                Payload::HeightUpdate { height, .. } => height,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn random_latency_keeps_per_pair_order() {
        let mut q = EventQueue::new(LatencyModel::Uniform { max_delay: 10 }, 7);
        for h in 0..200 {
            let now = h as u64 / 10;
            let e = q.send(now, msg(h as usize % 3, 3, h));
            assert!(e.time > now);
        }
        let mut last = [None; 3];
        let mut prev = (0, 0);
        while let Some(e) = q.pop() {
            assert!((e.time, e.seq) >= prev);
            prev = (e.time, e.seq);
            let Payload::HeightUpdate { height, .. } = e.message.payload else { unreachable!() };
            let src = e.message.src.0;
            assert!(last[src].is_none_or(|l| l < height));
            last[src] = Some(height);
        }
    }
}
