//! Physical layers and the shared single-user receiver state machine.

pub mod ber;
pub mod oqpsk;
pub mod uwb;

use crate::node::NodeId;
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PacketDecision {
    Delivered,
    Corrupted { first_bad_bit: u32 },
}

impl PacketDecision {
    pub fn is_delivered(self) -> bool {
        matches!(self, PacketDecision::Delivered)
    }
}

/// A transmission's footprint at one receiver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrival {
    pub tx: u64,
    pub source: NodeId,
    pub start: SimTime,
    pub end: SimTime,
    pub power_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrivalOutcome {
    Locked,
    Interference,
    BelowSensitivity,
}

/// A finished reception handed back for the packet decision.
#[derive(Clone, Debug)]
pub struct CompletedReception {
    pub signal: Arrival,
    pub interferers: Vec<Arrival>,
}

#[derive(Debug)]
struct Lock {
    signal: Arrival,
    interferers: Vec<Arrival>,
}

/// Half-duplex, single-user receiver. It locks onto the first arrival above
/// the receive threshold while idle; everything else that overlaps the
/// locked reception is interference.
#[derive(Debug)]
pub struct Receiver {
    sensitivity_w: f64,
    rx_threshold_w: f64,
    active: Vec<Arrival>,
    lock: Option<Lock>,
    tx_until: Option<SimTime>,
    /// Held for an ACK turnaround: not transmitting yet, but not idle.
    reserved: bool,
    energy_until: SimTime,
}

impl Receiver {
    pub fn new(sensitivity_w: f64, rx_threshold_w: f64) -> Self {
        Receiver {
            sensitivity_w,
            rx_threshold_w,
            active: Vec::new(),
            lock: None,
            tx_until: None,
            reserved: false,
            energy_until: SimTime::ZERO,
        }
    }

    pub fn sensitivity_w(&self) -> f64 {
        self.sensitivity_w
    }

    /// Receiver-side classification of an arriving transmission.
    pub fn on_arrival(&mut self, a: Arrival) -> ArrivalOutcome {
        if a.power_w < self.sensitivity_w {
            return ArrivalOutcome::BelowSensitivity;
        }
        self.energy_until = self.energy_until.max(a.end);
        if let Some(lock) = &mut self.lock {
            lock.interferers.push(a);
            self.active.push(a);
            return ArrivalOutcome::Interference;
        }
        let idle = self.tx_until.is_none() && !self.reserved;
        let outcome = if idle && a.power_w >= self.rx_threshold_w {
            self.lock = Some(Lock {
                signal: a,
                // already-arriving signals overlap the new reception
                interferers: self.active.clone(),
            });
            ArrivalOutcome::Locked
        } else {
            ArrivalOutcome::Interference
        };
        self.active.push(a);
        outcome
    }

    /// Removes a finished arrival. Returns the completed reception when it
    /// was the locked one.
    pub fn on_arrival_end(&mut self, tx: u64) -> Option<CompletedReception> {
        if let Some(i) = self.active.iter().position(|a| a.tx == tx) {
            self.active.swap_remove(i);
        }
        if self.lock.as_ref().is_some_and(|l| l.signal.tx == tx) {
            let lock = self.lock.take().unwrap();
            return Some(CompletedReception {
                signal: lock.signal,
                interferers: lock.interferers,
            });
        }
        None
    }

    /// Starts a transmission; any reception in progress is lost.
    pub fn start_tx(&mut self, until: SimTime) -> Option<Arrival> {
        self.tx_until = Some(until);
        self.reserved = false;
        self.energy_until = self.energy_until.max(until);
        self.lock.take().map(|l| l.signal)
    }

    pub fn end_tx(&mut self) {
        self.tx_until = None;
    }

    pub fn reserve(&mut self) {
        self.reserved = true;
    }

    pub fn is_transmitting(&self) -> bool {
        self.tx_until.is_some()
    }

    pub fn is_locked(&self) -> bool {
        self.lock.is_some()
    }

    pub fn locked_tx(&self) -> Option<u64> {
        self.lock.as_ref().map(|l| l.signal.tx)
    }

    /// Radio cannot start a new frame right now.
    pub fn is_busy(&self) -> bool {
        self.tx_until.is_some() || self.lock.is_some() || self.reserved
    }

    /// Energy-detect clear-channel assessment over `[since, now]`.
    pub fn channel_busy_since(&self, since: SimTime) -> bool {
        self.is_busy() || !self.active.is_empty() || self.energy_until > since
    }
}
