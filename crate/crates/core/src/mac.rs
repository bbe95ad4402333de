//! Medium access control.
//!
//! Three variants share one stop-and-wait engine: UnSlotted and Slotted
//! ALOHA-like access for the UWB radio, and unslotted CSMA/CA for the
//! narrowband baseline. Data frames are acknowledged per hop; broadcast
//! frames are not.
//!
//! [`MacState`] is sans-IO: every input returns a list of [`MacAction`]s that
//! the network engine carries out. Timers carry a token so that a timer armed
//! for an earlier phase is ignored once the state has moved on.

use std::collections::{HashMap, VecDeque};

use crate::error::{Result, SimError};
use crate::node::NodeId;
use crate::packet::{Frame, FrameBody, Packet, BROADCAST};
use crate::phy::Receiver;
use crate::rng::{mix_key, Purpose, RngStream};
use crate::sim::SimTime;

pub const MAX_RETX_LIMIT: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacVariant {
    Unslotted,
    Slotted { slot: SimTime },
    CsmaCa,
}

impl MacVariant {
    pub fn name(&self) -> &'static str {
        match self {
            MacVariant::Unslotted => "unslotted",
            MacVariant::Slotted { .. } => "slotted",
            MacVariant::CsmaCa => "csma-ca",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CsmaParams {
    pub min_be: u32,
    pub max_be: u32,
    /// Busy CCAs tolerated before the attempt is abandoned.
    pub max_backoffs: u32,
    pub unit_backoff: SimTime,
    pub cca_duration: SimTime,
}

impl Default for CsmaParams {
    fn default() -> Self {
        CsmaParams {
            min_be: 3,
            max_be: 5,
            max_backoffs: 4,
            unit_backoff: SimTime::from_us(320),
            cca_duration: SimTime::from_us(128),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacConfig {
    pub variant: MacVariant,
    pub max_retx: u32,
    pub ack_timeout: SimTime,
    pub backoff_window: u32,
    pub ack_bits: u32,
    /// Receive-to-transmit switch time before an ACK goes out.
    pub turnaround: SimTime,
    pub queue_limit: usize,
    pub csma: CsmaParams,
}

impl MacConfig {
    pub const DEFAULT_ACK_BITS: u32 = 64;
    pub const DEFAULT_BACKOFF_WINDOW: u32 = 8;
    pub const DEFAULT_QUEUE_LIMIT: usize = 50;

    /// `2 x (turnaround + max propagation + ack airtime)`.
    pub fn default_ack_timeout(turnaround: SimTime, max_propagation: SimTime, ack_airtime: SimTime) -> SimTime {
        (turnaround + max_propagation + ack_airtime).mul(2)
    }

    /// Data airtime + ack airtime + one guard interval.
    pub fn default_slot(data_airtime: SimTime, ack_airtime: SimTime, guard: SimTime) -> SimTime {
        data_airtime + ack_airtime + guard
    }

    pub fn slot(&self) -> Option<SimTime> {
        match self.variant {
            MacVariant::Slotted { slot } => Some(slot),
            _ => None,
        }
    }

    pub fn validate(&self, max_data_airtime: SimTime) -> Result<()> {
        if self.max_retx > MAX_RETX_LIMIT {
            return Err(SimError::invalid("mac.max_retx", format!("{} exceeds {MAX_RETX_LIMIT}", self.max_retx)));
        }
        if self.backoff_window == 0 {
            return Err(SimError::invalid("mac.backoff_window", "must be at least 1"));
        }
        if self.ack_bits == 0 {
            return Err(SimError::invalid("mac.ack_bits", "must be positive"));
        }
        if self.ack_timeout == SimTime::ZERO {
            return Err(SimError::invalid("mac.ack_timeout", "must be positive"));
        }
        if self.queue_limit == 0 {
            return Err(SimError::invalid("mac.queue_limit", "must be at least 1"));
        }
        if let MacVariant::Slotted { slot } = self.variant {
            if slot < max_data_airtime {
                return Err(SimError::invalid(
                    "mac.slot_duration",
                    format!("{slot} is shorter than the packet airtime {max_data_airtime}"),
                ));
            }
        }
        let c = &self.csma;
        if c.min_be > c.max_be || c.max_be > 16 {
            return Err(SimError::invalid("mac.csma", "need min_be <= max_be <= 16"));
        }
        Ok(())
    }
}

/// Start time of a first attempt requested at `request`.
///
/// For CSMA/CA this is the end of the first backoff and CCA assuming the
/// channel is found idle.
pub fn tx_start_time(config: &MacConfig, request: SimTime, stream: &mut RngStream) -> SimTime {
    match config.variant {
        MacVariant::Unslotted => request,
        MacVariant::Slotted { slot } => request.ceil_to(slot),
        MacVariant::CsmaCa => request + csma_backoff(config.csma.min_be, &config.csma, stream) + config.csma.cca_duration,
    }
}

/// Random backoff of `[0, 2^be - 1]` unit periods.
pub fn csma_backoff(be: u32, params: &CsmaParams, stream: &mut RngStream) -> SimTime {
    let units = stream.below(1u64 << be.min(params.max_be));
    params.unit_backoff.mul(units)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetxDecision {
    RetransmitAt(SimTime),
    Drop,
}

/// Decision after `attempts` unacknowledged transmissions of a frame whose
/// airtime is `airtime`.
pub fn on_ack_timeout(
    config: &MacConfig,
    attempts: u32,
    now: SimTime,
    airtime: SimTime,
    stream: &mut RngStream,
) -> RetxDecision {
    if attempts > config.max_retx {
        return RetxDecision::Drop;
    }
    let w = config.backoff_window.max(1);
    match config.variant {
        MacVariant::Unslotted => {
            let u = 1.0 + (w - 1) as f64 * stream.uniform01();
            RetxDecision::RetransmitAt(now + SimTime::from_ps((airtime.ps() as f64 * u).round() as u64))
        }
        MacVariant::Slotted { slot } => {
            let u = 1 + stream.below(w as u64);
            RetxDecision::RetransmitAt((now + slot.mul(u)).ceil_to(slot))
        }
        MacVariant::CsmaCa => RetxDecision::RetransmitAt(now),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MacTimer {
    /// Attempt start (CSMA: backoff expiry).
    Start,
    CcaEnd,
    AckTimeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DropReason {
    QueueFull,
    RetryLimit,
    ChannelAccess,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MacAction {
    Transmit(Frame),
    SetTimer { at: SimTime, timer: MacTimer, token: u64 },
    /// Finished: acknowledged unicast or a sent broadcast.
    Sent(Packet),
    Dropped { packet: Packet, next_hop: NodeId, reason: DropReason },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MacStats {
    pub data_tx: u64,
    pub retransmissions: u64,
    pub acked: u64,
    pub dropped_queue: u64,
    pub dropped_retry: u64,
    pub dropped_channel: u64,
    pub deferrals: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    WaitStart,
    Deferred,
    Cca { since: SimTime },
    Transmitting,
    AwaitAck,
}

#[derive(Debug)]
struct Outgoing {
    frame: Frame,
    attempts: u32,
    nb: u32,
    be: u32,
    defers: u32,
}

impl Outgoing {
    fn uid(&self) -> u64 {
        self.frame.packet().map_or(0, |p| p.uid)
    }
}

/// Per-node MAC state.
#[derive(Debug)]
pub struct MacState {
    node: NodeId,
    seed: u64,
    config: MacConfig,
    bit_time: SimTime,
    queue: VecDeque<(NodeId, Packet)>,
    current: Option<Outgoing>,
    phase: Phase,
    token: u64,
    next_seq: u32,
    last_rx_seq: HashMap<NodeId, u32>,
    stats: MacStats,
}

impl MacState {
    pub fn new(node: NodeId, seed: u64, config: MacConfig, bit_time: SimTime) -> Self {
        MacState {
            node,
            seed,
            config,
            bit_time,
            queue: VecDeque::new(),
            current: None,
            phase: Phase::Idle,
            token: 0,
            next_seq: 0,
            last_rx_seq: HashMap::new(),
            stats: MacStats::default(),
        }
    }

    pub fn config(&self) -> &MacConfig {
        &self.config
    }

    pub fn stats(&self) -> MacStats {
        self.stats
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_idle(&self) -> bool {
        self.phase == Phase::Idle
    }

    pub fn is_deferred(&self) -> bool {
        self.phase == Phase::Deferred
    }

    /// Transmissions made so far for the frame in service.
    pub fn attempts(&self) -> u32 {
        self.current.as_ref().map_or(0, |c| c.attempts)
    }

    pub fn airtime(&self, bits: u32) -> SimTime {
        self.bit_time.mul(bits as u64)
    }

    pub fn ack_frame(&self, to: NodeId, acked_seq: u32) -> Frame {
        Frame {
            src: self.node,
            dst: to,
            seq: acked_seq,
            bits: self.config.ack_bits,
            body: FrameBody::Ack { acked_seq },
        }
    }

    /// Stream for one random draw tied to the frame in service, so that
    /// runs that agree on a packet's history also agree on its backoffs.
    fn stream(&self, kind: u64) -> RngStream {
        let (uid, attempts, nb, defers) = self
            .current
            .as_ref()
            .map_or((0, 0, 0, 0), |c| (c.uid(), c.attempts, c.nb, c.defers));
        let key = mix_key(&[uid, attempts as u64, nb as u64, defers as u64, kind]);
        RngStream::keyed(self.seed, self.node as u64, Purpose::MacBackoff, key)
    }

    fn arm(&mut self, at: SimTime, timer: MacTimer, out: &mut Vec<MacAction>) {
        self.token += 1;
        out.push(MacAction::SetTimer { at, timer, token: self.token });
    }

    /// Hands a packet to the MAC for transmission to `next_hop`.
    pub fn enqueue(&mut self, now: SimTime, next_hop: NodeId, packet: Packet) -> Vec<MacAction> {
        let mut out = Vec::new();
        if self.queue.len() >= self.config.queue_limit {
            self.stats.dropped_queue += 1;
            out.push(MacAction::Dropped { packet, next_hop, reason: DropReason::QueueFull });
            return out;
        }
        self.queue.push_back((next_hop, packet));
        if self.phase == Phase::Idle {
            self.start_next(now, &mut out);
        }
        out
    }

    fn start_next(&mut self, now: SimTime, out: &mut Vec<MacAction>) {
        debug_assert!(self.current.is_none());
        let Some((next_hop, packet)) = self.queue.pop_front() else {
            self.phase = Phase::Idle;
            return;
        };
        let seq = self.next_seq;
        self.next_seq = self.next_seq.wrapping_add(1);
        let frame = Frame {
            src: self.node,
            dst: if packet.is_broadcast() { BROADCAST } else { next_hop },
            seq,
            bits: packet.bits,
            body: FrameBody::Data(packet),
        };
        self.current = Some(Outgoing {
            frame,
            attempts: 0,
            nb: 0,
            be: self.config.csma.min_be,
            defers: 0,
        });
        self.schedule_attempt(now, out);
    }

    /// Arms the start timer of the next attempt of the frame in service.
    fn schedule_attempt(&mut self, at: SimTime, out: &mut Vec<MacAction>) {
        let start = match self.config.variant {
            MacVariant::Unslotted => at,
            MacVariant::Slotted { slot } => at.ceil_to(slot),
            MacVariant::CsmaCa => {
                let be = self.current.as_ref().map_or(self.config.csma.min_be, |c| c.be);
                let mut s = self.stream(1);
                at + csma_backoff(be, &self.config.csma, &mut s)
            }
        };
        self.phase = Phase::WaitStart;
        self.arm(start, MacTimer::Start, out);
    }

    pub fn on_timer(&mut self, now: SimTime, timer: MacTimer, token: u64, radio: &Receiver) -> Vec<MacAction> {
        let mut out = Vec::new();
        if token != self.token {
            return out;
        }
        match (timer, self.phase) {
            (MacTimer::Start, Phase::WaitStart) => match self.config.variant {
                MacVariant::CsmaCa => {
                    self.phase = Phase::Cca { since: now };
                    self.arm(now + self.config.csma.cca_duration, MacTimer::CcaEnd, &mut out);
                }
                _ => {
                    if radio.is_busy() {
                        self.phase = Phase::Deferred;
                        self.stats.deferrals += 1;
                        if let Some(c) = self.current.as_mut() {
                            c.defers += 1;
                        }
                    } else {
                        self.transmit(&mut out);
                    }
                }
            },
            (MacTimer::CcaEnd, Phase::Cca { since }) => {
                if radio.channel_busy_since(since) {
                    let c = self.current.as_mut().expect("frame in service");
                    c.nb += 1;
                    c.be = (c.be + 1).min(self.config.csma.max_be);
                    if c.nb > self.config.csma.max_backoffs {
                        self.stats.dropped_channel += 1;
                        self.finish_dropped(DropReason::ChannelAccess, now, &mut out);
                    } else {
                        self.schedule_attempt(now, &mut out);
                    }
                } else {
                    self.transmit(&mut out);
                }
            }
            (MacTimer::AckTimeout, Phase::AwaitAck) => {
                let (attempts, bits) = {
                    let c = self.current.as_ref().expect("frame in service");
                    (c.attempts, c.frame.bits)
                };
                let mut s = self.stream(2);
                match on_ack_timeout(&self.config, attempts, now, self.airtime(bits), &mut s) {
                    RetxDecision::Drop => {
                        self.stats.dropped_retry += 1;
                        self.finish_dropped(DropReason::RetryLimit, now, &mut out);
                    }
                    RetxDecision::RetransmitAt(t) => {
                        let c = self.current.as_mut().expect("frame in service");
                        c.nb = 0;
                        c.be = self.config.csma.min_be;
                        self.schedule_attempt(t, &mut out);
                    }
                }
            }
            _ => {}
        }
        out
    }

    fn transmit(&mut self, out: &mut Vec<MacAction>) {
        let c = self.current.as_mut().expect("frame in service");
        if c.attempts > 0 {
            self.stats.retransmissions += 1;
        }
        c.attempts += 1;
        debug_assert!(c.attempts <= self.config.max_retx + 1);
        self.stats.data_tx += 1;
        self.phase = Phase::Transmitting;
        out.push(MacAction::Transmit(c.frame.clone()));
    }

    /// The data frame handed out by the last `Transmit` left the antenna.
    pub fn on_tx_end(&mut self, now: SimTime) -> Vec<MacAction> {
        let mut out = Vec::new();
        if self.phase != Phase::Transmitting {
            return out;
        }
        let broadcast = self.current.as_ref().is_some_and(|c| c.frame.is_broadcast());
        if broadcast {
            self.finish_sent(now, &mut out);
        } else {
            self.phase = Phase::AwaitAck;
            self.arm(now + self.config.ack_timeout, MacTimer::AckTimeout, &mut out);
        }
        out
    }

    /// The radio became free while an attempt was deferred. `own_tx` is set
    /// when it was busy with this node's own transmission.
    pub fn on_radio_free(&mut self, now: SimTime, own_tx: bool) -> Vec<MacAction> {
        let mut out = Vec::new();
        if self.phase != Phase::Deferred {
            return out;
        }
        let at = match self.config.variant {
            MacVariant::Slotted { slot } => now.ceil_to(slot),
            _ if own_tx => now,
            _ => {
                let bits = self.current.as_ref().map_or(0, |c| c.frame.bits);
                let mut s = self.stream(3);
                let jitter = SimTime::from_ps((self.airtime(bits).ps() as f64 * s.uniform01()) as u64);
                now + self.config.ack_timeout + jitter
            }
        };
        self.phase = Phase::WaitStart;
        self.arm(at, MacTimer::Start, &mut out);
        out
    }

    /// An ACK addressed to this node was received.
    pub fn on_ack(&mut self, now: SimTime, from: NodeId, acked_seq: u32) -> Vec<MacAction> {
        let mut out = Vec::new();
        let matches = self
            .current
            .as_ref()
            .is_some_and(|c| c.frame.dst == from && c.frame.seq == acked_seq && c.attempts > 0);
        if matches && self.phase != Phase::Transmitting {
            self.stats.acked += 1;
            self.finish_sent(now, &mut out);
        }
        out
    }

    /// Records a data frame addressed to this node; true if it is new.
    pub fn accept_data(&mut self, from: NodeId, seq: u32) -> bool {
        self.last_rx_seq.insert(from, seq) != Some(seq)
    }

    fn finish_sent(&mut self, now: SimTime, out: &mut Vec<MacAction>) {
        let c = self.current.take().expect("frame in service");
        self.token += 1;
        if let FrameBody::Data(p) = c.frame.body {
            out.push(MacAction::Sent(p));
        }
        self.phase = Phase::Idle;
        self.start_next(now, out);
    }

    fn finish_dropped(&mut self, reason: DropReason, now: SimTime, out: &mut Vec<MacAction>) {
        let c = self.current.take().expect("frame in service");
        self.token += 1;
        let next_hop = c.frame.dst;
        if let FrameBody::Data(packet) = c.frame.body {
            out.push(MacAction::Dropped { packet, next_hop, reason });
        }
        self.phase = Phase::Idle;
        self.start_next(now, out);
    }
}
