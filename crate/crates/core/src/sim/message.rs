use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::flow::Outcome;
use crate::locking::CommodityId;
use crate::network::NodeId;

/// Progress information flooded through the network for one commodity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// The sink has accepted this much in total so far.
    SinkReport { delivered: Amount },
    /// The source saw all of its demand either delivered or returned.
    Decided { outcome: Outcome },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// Offer to move `amount` of the sender's reserved excess. Valid only
    /// while the sender stays at `sender_height`.
    PushRequest { commodity: CommodityId, amount: Amount, sender_height: u32 },
    /// The receiver committed `amount > 0`, at most the requested amount.
    PushAccept { commodity: CommodityId, amount: Amount },
    /// Nothing was committed. `height` is the receiver's current height.
    PushReject { commodity: CommodityId, height: u32 },
    HeightUpdate { commodity: CommodityId, height: u32 },
    Commit { commodity: CommodityId, info: Termination },
}

impl Payload {
    pub fn commodity(&self) -> CommodityId {
        match *self {
            Payload::PushRequest { commodity, .. }
            | Payload::PushAccept { commodity, .. }
            | Payload::PushReject { commodity, .. }
            | Payload::HeightUpdate { commodity, .. }
            | Payload::Commit { commodity, .. } => commodity,
        }
    }
}

/// A payload addressed from one node to a neighbour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Payload,
}
