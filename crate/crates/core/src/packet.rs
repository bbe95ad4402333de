//! Network packets and MAC frames.

use crate::node::NodeId;
use crate::sim::SimTime;

pub const BROADCAST: NodeId = usize::MAX;

/// Identifies one intruder beacon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeaconId {
    pub intruder: NodeId,
    pub index: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteRequest {
    pub originator: NodeId,
    pub originator_seq: u32,
    pub rreq_id: u32,
    pub dest: NodeId,
    pub dest_seq: Option<u32>,
    pub hop_count: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteReply {
    pub originator: NodeId,
    pub dest: NodeId,
    pub dest_seq: u32,
    pub hop_count: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Cbr { flow: usize, seq: u64 },
    Detect { sensor: NodeId, beacon: BeaconId, emitted_at: SimTime },
    AuthReq { req_id: u64, sensor: NodeId, intruder: NodeId },
    AuthResp { req_id: u64, sensor: NodeId, intruder: NodeId },
    AuthNotify { req_id: u64, sensor: NodeId, intruder: NodeId },
    Rreq(RouteRequest),
    Rrep(RouteReply),
}

impl Payload {
    pub fn name(&self) -> &'static str {
        match self {
            Payload::Cbr { .. } => "cbr",
            Payload::Detect { .. } => "detect",
            Payload::AuthReq { .. } => "auth-req",
            Payload::AuthResp { .. } => "auth-resp",
            Payload::AuthNotify { .. } => "auth-notify",
            Payload::Rreq(_) => "rreq",
            Payload::Rrep(_) => "rrep",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    /// Unique per run; `(origin << 32) | origin-local counter`.
    pub uid: u64,
    pub origin: NodeId,
    /// Final destination, or [`BROADCAST`] for one-hop broadcasts.
    pub dest: NodeId,
    pub created_at: SimTime,
    pub bits: u32,
    pub payload: Payload,
    /// Nodes that have transmitted this packet, in order.
    pub hops: Vec<NodeId>,
}

impl Packet {
    pub fn is_broadcast(&self) -> bool {
        self.dest == BROADCAST
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrameBody {
    Data(Packet),
    Ack { acked_seq: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub src: NodeId,
    /// Next hop, or [`BROADCAST`].
    pub dst: NodeId,
    pub seq: u32,
    pub bits: u32,
    pub body: FrameBody,
}

impl Frame {
    pub fn is_ack(&self) -> bool {
        matches!(self.body, FrameBody::Ack { .. })
    }

    pub fn is_broadcast(&self) -> bool {
        self.dst == BROADCAST
    }

    pub fn packet(&self) -> Option<&Packet> {
        match &self.body {
            FrameBody::Data(p) => Some(p),
            FrameBody::Ack { .. } => None,
        }
    }
}
