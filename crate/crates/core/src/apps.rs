//! Traffic generators and the detection / authentication application.

use std::collections::{HashMap, HashSet};

use crate::error::{Result, SimError};
use crate::node::NodeId;
use crate::rng::RngStream;
use crate::sim::SimTime;

pub const CBR_PAYLOAD_BITS: u32 = 512;
pub const REPORT_PAYLOAD_BITS: u32 = 256;
pub const MIN_RATE_PPS: f64 = 0.1;
pub const MAX_RATE_PPS: f64 = 80.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CbrFlow {
    pub source: NodeId,
    pub destination: NodeId,
    pub rate_pps: f64,
    pub payload_bits: u32,
    pub start: SimTime,
    /// No packet is generated at or after `stop`.
    pub stop: SimTime,
}

impl CbrFlow {
    pub fn validate(&self) -> Result<()> {
        // small tolerance so that 0.1 written as text round-trips
        if !(self.rate_pps >= MIN_RATE_PPS * (1.0 - 1e-9) && self.rate_pps <= MAX_RATE_PPS * (1.0 + 1e-9)) {
            return Err(SimError::invalid(
                "flow.rate",
                format!("{} pkt/s outside [{MIN_RATE_PPS}, {MAX_RATE_PPS}]", self.rate_pps),
            ));
        }
        if self.payload_bits == 0 {
            return Err(SimError::invalid("flow.payload_bits", "must be positive"));
        }
        if self.source == self.destination {
            return Err(SimError::invalid("flow", "source and destination must differ"));
        }
        if self.stop < self.start {
            return Err(SimError::invalid("flow.stop", "must not precede start"));
        }
        Ok(())
    }

    pub fn interval(&self) -> SimTime {
        SimTime::from_secs(1.0 / self.rate_pps)
    }
}

/// Emission instants of one flow: `start + phase + k / rate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CbrSchedule {
    pub first: SimTime,
    pub interval: SimTime,
    pub stop: SimTime,
}

impl CbrSchedule {
    /// Draws the per-flow phase once, uniformly in `[0, 1/rate)`.
    pub fn new(flow: &CbrFlow, stream: &mut RngStream) -> Self {
        let interval = flow.interval();
        let phase = SimTime::from_ps(stream.below(interval.ps().max(1)));
        CbrSchedule {
            first: flow.start + phase,
            interval,
            stop: flow.stop,
        }
    }

    pub fn emission(&self, k: u64) -> Option<SimTime> {
        let t = self.first + self.interval.mul(k);
        (t < self.stop).then_some(t)
    }

    pub fn count(&self) -> u64 {
        match self.stop.checked_sub(self.first) {
            Some(d) if d > SimTime::ZERO => (d.ps() - 1) / self.interval.ps() + 1,
            _ => 0,
        }
    }
}

/// Pending authentication exchanges of one sensor.
#[derive(Clone, Debug, Default)]
pub struct AuthTracker {
    pending: HashMap<u64, (NodeId, SimTime)>,
}

impl AuthTracker {
    pub fn start(&mut self, req_id: u64, intruder: NodeId, deadline: SimTime) {
        self.pending.insert(req_id, (intruder, deadline));
    }

    /// Accepts a response that arrives before its deadline; each request is
    /// answered at most once.
    pub fn on_response(&mut self, req_id: u64, intruder: NodeId, now: SimTime) -> bool {
        match self.pending.get(&req_id) {
            Some(&(who, deadline)) if who == intruder && now < deadline => {
                self.pending.remove(&req_id);
                true
            }
            _ => false,
        }
    }

    pub fn expire(&mut self, req_id: u64) {
        self.pending.remove(&req_id);
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Application-level duplicate filter keyed by packet uid.
#[derive(Clone, Debug, Default)]
pub struct Dedup {
    seen: HashSet<u64>,
}

impl Dedup {
    pub fn first_time(&mut self, uid: u64) -> bool {
        self.seen.insert(uid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    fn flow(rate: f64) -> CbrFlow {
        CbrFlow {
            source: 1,
            destination: 0,
            rate_pps: rate,
            payload_bits: CBR_PAYLOAD_BITS,
            start: SimTime::ZERO,
            stop: SimTime::from_secs(100.0),
        }
    }

    #[test]
    fn one_pps_for_100_s() {
        let mut s = RngStream::new(1, 1, Purpose::AppTraffic);
        let sch = CbrSchedule::new(&flow(1.0), &mut s);
        assert_eq!(sch.count(), 100);
        assert!(sch.emission(99).is_some() && sch.emission(100).is_none());
    }

    #[test]
    fn low_rate_gap() {
        assert_eq!(flow(0.1).interval(), SimTime::from_secs(10.0));
    }

    #[test]
    fn phases_differ_between_flows() {
        let a = CbrSchedule::new(&flow(2.0), &mut RngStream::new(1, 1, Purpose::AppTraffic));
        let b = CbrSchedule::new(&flow(2.0), &mut RngStream::new(1, 2, Purpose::AppTraffic));
        assert_ne!(a.first, b.first);
        assert!(a.first < SimTime::from_ms(500) && b.first < SimTime::from_ms(500));
    }

    #[test]
    fn validation() {
        assert!(flow(0.1).validate().is_ok());
        assert!(flow(80.0).validate().is_ok());
        assert!(flow(0.05).validate().is_err());
        assert!(flow(100.0).validate().is_err());
    }

    #[test]
    fn auth_timer() {
        let mut t = AuthTracker::default();
        t.start(1, 7, SimTime::from_ms(500));
        t.start(2, 8, SimTime::from_ms(500));
        assert!(!t.on_response(1, 9, SimTime::from_ms(10)));
        assert!(t.on_response(1, 7, SimTime::from_ms(10)));
        assert!(!t.on_response(1, 7, SimTime::from_ms(20)));
        assert!(!t.on_response(2, 8, SimTime::from_ms(500)));
    }
}
