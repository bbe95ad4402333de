//! Discrete-event core: virtual clock and the ordered event queue.
//!
//! Time is kept as an integer number of picoseconds. Chip-level arithmetic
//! (frame modulo, slot alignment) needs exact remainders, and the same
//! integer clock makes every ordering decision reproducible across platforms.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use crate::error::SimError;

pub const PS_PER_SEC: u64 = 1_000_000_000_000;

/// A point (or span) of virtual time in picoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * 1_000)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * 1_000_000)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000_000_000)
    }

    /// Rounds to the nearest picosecond. Negative and non-finite inputs clamp to zero.
    pub fn from_secs(secs: f64) -> Self {
        if !(secs > 0.0) {
            return SimTime::ZERO;
        }
        let ps = (secs * PS_PER_SEC as f64).round();
        if ps >= u64::MAX as f64 {
            SimTime::MAX
        } else {
            SimTime(ps as u64)
        }
    }

    pub const fn ps(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / PS_PER_SEC as f64
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn mul(self, k: u64) -> SimTime {
        SimTime(self.0.saturating_mul(k))
    }

    /// Smallest multiple of `period` that is `>= self`.
    pub fn ceil_to(self, period: SimTime) -> SimTime {
        assert!(period.0 > 0, "period must be positive");
        let rem = self.0 % period.0;
        if rem == 0 {
            self
        } else {
            SimTime(self.0 - rem + period.0)
        }
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 = self.0.saturating_add(rhs.0);
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(
            self.0
                .checked_sub(rhs.0)
                .expect("SimTime subtraction underflow"),
        )
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12}", self.as_secs())
    }
}

/// A queued event. `seq` is assigned by the scheduler and breaks ties
/// between events with the same `fire_time` in insertion order.
#[derive(Clone, Debug)]
pub struct Event<K> {
    pub fire_time: SimTime,
    pub seq: u64,
    pub target: usize,
    pub kind: K,
}

impl<K> PartialEq for Event<K> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_time == other.fire_time && self.seq == other.seq
    }
}

impl<K> Eq for Event<K> {}

impl<K> PartialOrd for Event<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Event<K> {
    // Reversed so that `BinaryHeap` pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_time
            .cmp(&self.fire_time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Virtual clock plus pending-event priority queue.
#[derive(Debug)]
pub struct Scheduler<K> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Event<K>>,
}

impl<K> Default for Scheduler<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Scheduler<K> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Enqueues `kind` for `target` at `fire_time`. Returns the assigned
    /// sequence number.
    pub fn schedule(&mut self, fire_time: SimTime, target: usize, kind: K) -> Result<u64, SimError> {
        if fire_time < self.now {
            return Err(SimError::Causality {
                now: self.now.as_secs(),
                requested: fire_time.as_secs(),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event {
            fire_time,
            seq,
            target,
            kind,
        });
        Ok(seq)
    }

    /// Pops the next event if it fires at or before `limit`, advancing the clock.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<Event<K>> {
        if self.queue.peek()?.fire_time > limit {
            return None;
        }
        let ev = self.queue.pop()?;
        self.now = ev.fire_time;
        Some(ev)
    }

    /// Moves the clock forward to `t` without processing anything.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fires_in_time_order() {
        let mut s = Scheduler::new();
        s.schedule(SimTime::from_secs(5.0), 0, "late").unwrap();
        s.schedule(SimTime::from_secs(1.0), 0, "early").unwrap();
        let first = s.pop_until(SimTime::MAX).unwrap();
        assert_eq!(first.kind, "early");
        assert_eq!(s.now(), SimTime::from_secs(1.0));
        assert_eq!(s.pop_until(SimTime::MAX).unwrap().kind, "late");
        assert_eq!(s.now(), SimTime::from_secs(5.0));
    }

    #[test]
    fn equal_times_fire_in_insertion_order() {
        let mut s = Scheduler::new();
        let t = SimTime::from_secs(5.0);
        let a = s.schedule(t, 0, 'a').unwrap();
        let b = s.schedule(t, 0, 'b').unwrap();
        assert!(a < b);
        assert_eq!(s.pop_until(t).unwrap().kind, 'a');
        assert_eq!(s.pop_until(t).unwrap().kind, 'b');
    }

    #[test]
    fn rejects_past_events() {
        let mut s = Scheduler::new();
        s.schedule(SimTime::from_secs(1.0), 0, ()).unwrap();
        s.pop_until(SimTime::MAX).unwrap();
        let err = s.schedule(SimTime::from_secs(0.5), 0, ()).unwrap_err();
        assert!(matches!(err, SimError::Causality { .. }));
    }

    #[test]
    fn pop_respects_limit() {
        let mut s = Scheduler::new();
        s.schedule(SimTime::from_secs(2.0), 0, ()).unwrap();
        assert!(s.pop_until(SimTime::from_secs(1.0)).is_none());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn ceil_to_boundaries() {
        let slot = SimTime::from_us(500);
        assert_eq!(SimTime::from_us(1230).ceil_to(slot), SimTime::from_us(1500));
        assert_eq!(SimTime::from_us(1500).ceil_to(slot), SimTime::from_us(1500));
        assert_eq!(SimTime::ZERO.ceil_to(slot), SimTime::ZERO);
    }

    #[test]
    fn secs_round_trip() {
        let t = SimTime::from_secs(299.792458e-6);
        assert_eq!(t.ps(), 299_792_458);
        assert!((t.as_secs() - 299.792458e-6).abs() < 1e-15);
    }
}
