//! Network-layer routing: static tables and a reactive AODV-lite.
//!
//! AODV-lite keeps only what the scenarios exercise: RREQ flooding with
//! duplicate suppression, destination-only RREP, and hard route lifetimes.
//! There is no HELLO, no RERR and no intermediate-node reply. A route is
//! never refreshed by use; it ages out `lifetime` after it was installed.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Result, SimError};
use crate::node::NodeId;
use crate::packet::{Packet, Payload, RouteReply, RouteRequest, BROADCAST};
use crate::rng::{mix_key, Purpose, RngStream};
use crate::sim::SimTime;

/// Drop packets that have been forwarded this many times.
pub const MAX_HOPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RouteDropReason {
    NoRoute,
    BufferOverflow,
    DiscoveryFailed,
    HopLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RouteAction {
    Forward { next_hop: NodeId, packet: Packet },
    Deliver(Packet),
    /// A routing control message to `dst` (a neighbor or [`BROADCAST`]),
    /// to be handed to the MAC after `delay`.
    Control { dst: NodeId, payload: Payload, delay: SimTime },
    SetTimer { at: SimTime, dest: NodeId, token: u64 },
    Drop { packet: Packet, reason: RouteDropReason },
}

/// Next-hop table for one node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StaticTable {
    routes: HashMap<NodeId, NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NextHop {
    Local,
    Via(NodeId),
    NoRoute,
}

impl StaticTable {
    pub fn insert(&mut self, dest: NodeId, next_hop: NodeId) {
        self.routes.insert(dest, next_hop);
    }

    pub fn entries(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.routes.iter().map(|(&d, &n)| (d, n))
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }
}

pub fn static_next_hop(table: &StaticTable, me: NodeId, dest: NodeId) -> NextHop {
    if dest == me {
        return NextHop::Local;
    }
    match table.routes.get(&dest) {
        Some(&n) => NextHop::Via(n),
        None => NextHop::NoRoute,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AodvConfig {
    pub route_lifetime: SimTime,
    pub rreq_retries: u32,
    pub net_traversal: SimTime,
    pub buffer_cap: usize,
    pub rebroadcast_jitter: SimTime,
}

impl Default for AodvConfig {
    fn default() -> Self {
        AodvConfig {
            route_lifetime: SimTime::from_secs(10.0),
            rreq_retries: 2,
            net_traversal: SimTime::from_ms(800),
            buffer_cap: 16,
            rebroadcast_jitter: SimTime::from_ms(10),
        }
    }
}

impl AodvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.route_lifetime == SimTime::ZERO {
            return Err(SimError::invalid("routing.route_lifetime", "must be positive"));
        }
        if self.net_traversal == SimTime::ZERO {
            return Err(SimError::invalid("routing.net_traversal", "must be positive"));
        }
        if self.buffer_cap == 0 {
            return Err(SimError::invalid("routing.buffer_cap", "must be at least 1"));
        }
        Ok(())
    }

    pub fn discovery_timeout(&self) -> SimTime {
        self.net_traversal.mul(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub established_at: SimTime,
    pub lifetime: SimTime,
    pub dest_seq: u32,
}

impl RouteEntry {
    pub fn is_valid(&self, now: SimTime) -> bool {
        now.saturating_sub(self.established_at) < self.lifetime
    }

    pub fn expires_at(&self) -> SimTime {
        self.established_at + self.lifetime
    }
}

/// Sequence-number comparison with wraparound.
fn seq_newer(a: u32, b: u32) -> bool {
    (a.wrapping_sub(b) as i32) > 0
}

#[derive(Debug)]
struct Discovery {
    buffer: VecDeque<Packet>,
    retries_left: u32,
    token: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AodvStats {
    pub rreq_originated: u64,
    pub rreq_forwarded: u64,
    pub rrep_sent: u64,
    pub discoveries_failed: u64,
}

/// AODV-lite state of one node.
#[derive(Debug)]
pub struct Aodv {
    me: NodeId,
    seed: u64,
    config: AodvConfig,
    own_seq: u32,
    next_rreq_id: u32,
    routes: HashMap<NodeId, RouteEntry>,
    seen: HashSet<(NodeId, u32)>,
    pending: HashMap<NodeId, Discovery>,
    token: u64,
    stats: AodvStats,
}

impl Aodv {
    pub fn new(me: NodeId, seed: u64, config: AodvConfig) -> Self {
        Aodv {
            me,
            seed,
            config,
            own_seq: 0,
            next_rreq_id: 0,
            routes: HashMap::new(),
            seen: HashSet::new(),
            pending: HashMap::new(),
            token: 0,
            stats: AodvStats::default(),
        }
    }

    pub fn config(&self) -> &AodvConfig {
        &self.config
    }

    pub fn stats(&self) -> AodvStats {
        self.stats
    }

    pub fn route(&self, dest: NodeId, now: SimTime) -> Option<&RouteEntry> {
        self.routes.get(&dest).filter(|r| r.is_valid(now))
    }

    pub fn is_discovering(&self, dest: NodeId) -> bool {
        self.pending.contains_key(&dest)
    }

    pub fn buffered(&self, dest: NodeId) -> usize {
        self.pending.get(&dest).map_or(0, |d| d.buffer.len())
    }

    /// Routes a data packet originated here or received for forwarding.
    pub fn route_packet(&mut self, now: SimTime, packet: Packet) -> Vec<RouteAction> {
        let mut out = Vec::new();
        if packet.dest == self.me {
            out.push(RouteAction::Deliver(packet));
            return out;
        }
        if packet.hops.len() >= MAX_HOPS {
            out.push(RouteAction::Drop { packet, reason: RouteDropReason::HopLimit });
            return out;
        }
        if let Some(r) = self.route(packet.dest, now) {
            out.push(RouteAction::Forward { next_hop: r.next_hop, packet });
            return out;
        }
        let dest = packet.dest;
        let cap = self.config.buffer_cap;
        let fresh = !self.pending.contains_key(&dest);
        let d = self.pending.entry(dest).or_insert_with(|| Discovery {
            buffer: VecDeque::new(),
            retries_left: 0,
            token: 0,
        });
        if d.buffer.len() >= cap {
            let oldest = d.buffer.pop_front().expect("non-empty buffer");
            out.push(RouteAction::Drop { packet: oldest, reason: RouteDropReason::BufferOverflow });
        }
        d.buffer.push_back(packet);
        if fresh {
            d.retries_left = self.config.rreq_retries;
            self.send_rreq(now, dest, &mut out);
        }
        out
    }

    fn send_rreq(&mut self, now: SimTime, dest: NodeId, out: &mut Vec<RouteAction>) {
        self.own_seq = self.own_seq.wrapping_add(1);
        let rreq_id = self.next_rreq_id;
        self.next_rreq_id = self.next_rreq_id.wrapping_add(1);
        self.seen.insert((self.me, rreq_id));
        self.stats.rreq_originated += 1;
        let dest_seq = self.routes.get(&dest).map(|r| r.dest_seq);
        out.push(RouteAction::Control {
            dst: BROADCAST,
            payload: Payload::Rreq(RouteRequest {
                originator: self.me,
                originator_seq: self.own_seq,
                rreq_id,
                dest,
                dest_seq,
                hop_count: 0,
            }),
            delay: SimTime::ZERO,
        });
        self.token += 1;
        if let Some(d) = self.pending.get_mut(&dest) {
            d.token = self.token;
        }
        out.push(RouteAction::SetTimer {
            at: now + self.config.discovery_timeout(),
            dest,
            token: self.token,
        });
    }

    /// Discovery timer for `dest` fired.
    pub fn on_timer(&mut self, now: SimTime, dest: NodeId, token: u64) -> Vec<RouteAction> {
        let mut out = Vec::new();
        let Some(d) = self.pending.get_mut(&dest) else {
            return out;
        };
        if d.token != token {
            return out;
        }
        if d.retries_left > 0 {
            d.retries_left -= 1;
            self.send_rreq(now, dest, &mut out);
        } else {
            let d = self.pending.remove(&dest).expect("pending discovery");
            self.stats.discoveries_failed += 1;
            out.extend(
                d.buffer
                    .into_iter()
                    .map(|packet| RouteAction::Drop { packet, reason: RouteDropReason::DiscoveryFailed }),
            );
        }
        out
    }

    /// Installs `entry` under the freshness rule; returns whether it was used.
    fn offer_route(&mut self, now: SimTime, entry: RouteEntry) -> bool {
        let replace = match self.routes.get(&entry.destination) {
            None => true,
            // expired entries keep their sequence number for comparison
            Some(old) => {
                seq_newer(entry.dest_seq, old.dest_seq)
                    || (entry.dest_seq == old.dest_seq && (!old.is_valid(now) || entry.hop_count < old.hop_count))
            }
        };
        if replace {
            self.routes.insert(entry.destination, entry);
        }
        replace
    }

    fn entry(&self, now: SimTime, destination: NodeId, next_hop: NodeId, hop_count: u32, dest_seq: u32) -> RouteEntry {
        RouteEntry {
            destination,
            next_hop,
            hop_count,
            established_at: now,
            lifetime: self.config.route_lifetime,
            dest_seq,
        }
    }

    /// Sends any packets buffered for `dest` now that a route exists.
    fn flush(&mut self, now: SimTime, dest: NodeId, out: &mut Vec<RouteAction>) {
        let Some(next_hop) = self.route(dest, now).map(|r| r.next_hop) else {
            return;
        };
        if let Some(d) = self.pending.remove(&dest) {
            out.extend(d.buffer.into_iter().map(|packet| RouteAction::Forward { next_hop, packet }));
        }
    }

    pub fn on_rreq(&mut self, now: SimTime, rreq: &RouteRequest, from: NodeId) -> Vec<RouteAction> {
        let mut out = Vec::new();
        if rreq.originator == self.me || !self.seen.insert((rreq.originator, rreq.rreq_id)) {
            return out;
        }
        let reverse = self.entry(now, rreq.originator, from, rreq.hop_count + 1, rreq.originator_seq);
        self.offer_route(now, reverse);
        self.flush(now, rreq.originator, &mut out);
        if rreq.dest == self.me {
            if let Some(s) = rreq.dest_seq {
                if seq_newer(s, self.own_seq) {
                    self.own_seq = s;
                }
            }
            self.own_seq = self.own_seq.wrapping_add(1);
            self.stats.rrep_sent += 1;
            out.push(RouteAction::Control {
                dst: from,
                payload: Payload::Rrep(RouteReply {
                    originator: rreq.originator,
                    dest: self.me,
                    dest_seq: self.own_seq,
                    hop_count: 0,
                }),
                delay: SimTime::ZERO,
            });
        } else {
            let key = mix_key(&[rreq.originator as u64, rreq.rreq_id as u64]);
            let mut s = RngStream::keyed(self.seed, self.me as u64, Purpose::Routing, key);
            let delay = SimTime::from_ps((self.config.rebroadcast_jitter.ps() as f64 * s.uniform01()) as u64);
            self.stats.rreq_forwarded += 1;
            out.push(RouteAction::Control {
                dst: BROADCAST,
                payload: Payload::Rreq(RouteRequest {
                    hop_count: rreq.hop_count + 1,
                    ..rreq.clone()
                }),
                delay,
            });
        }
        out
    }

    pub fn on_rrep(&mut self, now: SimTime, rrep: &RouteReply, from: NodeId) -> Vec<RouteAction> {
        let mut out = Vec::new();
        let forward = self.entry(now, rrep.dest, from, rrep.hop_count + 1, rrep.dest_seq);
        self.offer_route(now, forward);
        if rrep.originator == self.me {
            self.flush(now, rrep.dest, &mut out);
            return out;
        }
        self.flush(now, rrep.dest, &mut out);
        if let Some(r) = self.route(rrep.originator, now) {
            out.push(RouteAction::Control {
                dst: r.next_hop,
                payload: Payload::Rrep(RouteReply {
                    hop_count: rrep.hop_count + 1,
                    ..rrep.clone()
                }),
                delay: SimTime::ZERO,
            });
        }
        out
    }
}

#[derive(Debug)]
pub enum Router {
    Static { me: NodeId, table: StaticTable },
    Aodv(Aodv),
}

impl Router {
    pub fn route_packet(&mut self, now: SimTime, packet: Packet) -> Vec<RouteAction> {
        match self {
            Router::Static { me, table } => {
                let action = match static_next_hop(table, *me, packet.dest) {
                    NextHop::Local => RouteAction::Deliver(packet),
                    NextHop::Via(next_hop) if packet.hops.len() < MAX_HOPS => RouteAction::Forward { next_hop, packet },
                    NextHop::Via(_) => RouteAction::Drop { packet, reason: RouteDropReason::HopLimit },
                    NextHop::NoRoute => RouteAction::Drop { packet, reason: RouteDropReason::NoRoute },
                };
                vec![action]
            }
            Router::Aodv(a) => a.route_packet(now, packet),
        }
    }

    pub fn on_control(&mut self, now: SimTime, payload: &Payload, from: NodeId) -> Vec<RouteAction> {
        match (self, payload) {
            (Router::Aodv(a), Payload::Rreq(r)) => a.on_rreq(now, r, from),
            (Router::Aodv(a), Payload::Rrep(r)) => a.on_rrep(now, r, from),
            _ => Vec::new(),
        }
    }

    pub fn on_timer(&mut self, now: SimTime, dest: NodeId, token: u64) -> Vec<RouteAction> {
        match self {
            Router::Aodv(a) => a.on_timer(now, dest, token),
            Router::Static { .. } => Vec::new(),
        }
    }

    pub fn aodv(&self) -> Option<&Aodv> {
        match self {
            Router::Aodv(a) => Some(a),
            Router::Static { .. } => None,
        }
    }
}
