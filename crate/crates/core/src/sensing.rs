//! Sensor device and sensing channel.
//!
//! Intruders emit a beacon at the sensors' sampling rate. The level seen by
//! a sensor follows two-ray ground loss plus Ricean fading. Two thresholds
//! split the level axis: below the sensitivity nothing is sensed, between
//! the thresholds detection is a coin flip, above the detection threshold it
//! succeeds with the device reliability. Beacons from two or more intruders
//! reaching the same sensor within one sampling window collide and are lost.

use std::collections::HashMap;

use crate::channel::{fading_gain, linear_to_db, two_ray_loss, Fading, MIN_DISTANCE};
use crate::error::{Result, SimError};
use crate::node::NodeId;
use crate::rng::RngStream;
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensingParams {
    /// Beacon emission rate of intruders, Hz.
    pub sampling_rate: f64,
    pub sensitivity_threshold_dbm: f64,
    pub detection_threshold_dbm: f64,
    pub reliability: f64,
    pub mid_band_probability: f64,
    pub sensing_tx_power_dbm: f64,
    pub rice_k: f64,
    pub frequency_hz: f64,
    pub emitter_height_m: f64,
    pub sensor_height_m: f64,
    /// Repeated detections of one intruder by one sensor inside this
    /// interval are not reported.
    pub holdoff: SimTime,
    pub auth_timeout: SimTime,
}

impl Default for SensingParams {
    fn default() -> Self {
        SensingParams {
            sampling_rate: 1.0,
            sensitivity_threshold_dbm: -90.0,
            detection_threshold_dbm: -80.0,
            reliability: 0.95,
            mid_band_probability: 0.5,
            sensing_tx_power_dbm: -16.0,
            rice_k: 6.0,
            frequency_hz: 0.8e9,
            emitter_height_m: 0.45,
            sensor_height_m: 0.45,
            holdoff: SimTime::from_secs(1.0),
            auth_timeout: SimTime::from_ms(500),
        }
    }
}

impl SensingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate > 0.0 && self.sampling_rate.is_finite()) {
            return Err(SimError::invalid("sensing.sampling_rate", "must be positive"));
        }
        if !(self.sensitivity_threshold_dbm <= self.detection_threshold_dbm) {
            return Err(SimError::invalid(
                "sensing.sensitivity_threshold",
                "must not exceed the detection threshold",
            ));
        }
        for (name, p) in [
            ("sensing.reliability", self.reliability),
            ("sensing.mid_band_probability", self.mid_band_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::invalid(name, format!("{p} is not a probability")));
            }
        }
        if !(self.rice_k >= 0.0) {
            return Err(SimError::invalid("sensing.rice_k", "must be >= 0"));
        }
        if !(self.frequency_hz > 0.0 && self.emitter_height_m > 0.0 && self.sensor_height_m > 0.0) {
            return Err(SimError::invalid("sensing.frequency", "frequency and heights must be positive"));
        }
        if !self.sensing_tx_power_dbm.is_finite() {
            return Err(SimError::invalid("sensing.tx_power", "must be finite"));
        }
        Ok(())
    }

    pub fn period(&self) -> SimTime {
        SimTime::from_secs(1.0 / self.sampling_rate)
    }

    pub fn fading(&self) -> Fading {
        if self.rice_k.is_infinite() {
            Fading::None
        } else {
            Fading::Rice { k: self.rice_k }
        }
    }
}

/// Unfaded sensed level in dBm at ground distance `d`.
pub fn mean_level(params: &SensingParams, d: f64) -> f64 {
    params.sensing_tx_power_dbm
        - two_ray_loss(
            d.max(MIN_DISTANCE),
            params.emitter_height_m,
            params.sensor_height_m,
            params.frequency_hz,
        )
}

/// One faded sample of the sensed level.
pub fn sense_level(params: &SensingParams, d: f64, stream: &mut RngStream) -> f64 {
    mean_level(params, d) + linear_to_db(fading_gain(params.fading(), stream))
}

/// A sensor is in range of an emitter when the unfaded level reaches the
/// sensitivity threshold.
pub fn in_range(params: &SensingParams, d: f64) -> bool {
    mean_level(params, d) >= params.sensitivity_threshold_dbm
}

/// Largest distance at which [`in_range`] holds.
pub fn sensing_range(params: &SensingParams) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while in_range(params, hi) && hi < 1e7 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if in_range(params, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SenseOutcome {
    Detected,
    MissedBelowSensitivity,
    MissedProbabilistic,
    MissedCollision,
}

/// `concurrent` counts distinct intruders (including the emitter) whose
/// beacons reach the sensor within the sampling window.
pub fn sense_decision(level_dbm: f64, params: &SensingParams, concurrent: usize, stream: &mut RngStream) -> SenseOutcome {
    if concurrent >= 2 {
        return SenseOutcome::MissedCollision;
    }
    if level_dbm < params.sensitivity_threshold_dbm {
        return SenseOutcome::MissedBelowSensitivity;
    }
    let p = if level_dbm < params.detection_threshold_dbm {
        params.mid_band_probability
    } else {
        params.reliability
    };
    if stream.bernoulli(p) {
        SenseOutcome::Detected
    } else {
        SenseOutcome::MissedProbabilistic
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensingEvent {
    pub intruder: NodeId,
    pub sensor: NodeId,
    pub emitted_at: SimTime,
    pub level_dbm: f64,
    pub outcome: SenseOutcome,
}

/// Periodic beacon schedule of one intruder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeaconSchedule {
    pub phase: SimTime,
    pub period: SimTime,
}

impl BeaconSchedule {
    /// Phase drawn once, uniformly in one period.
    pub fn new(period: SimTime, stream: &mut RngStream) -> Self {
        let phase = SimTime::from_ps(stream.below(period.ps().max(1)));
        BeaconSchedule { phase, period }
    }

    pub fn emission(&self, index: u64) -> SimTime {
        self.phase + self.period.mul(index)
    }

    /// Emissions in `[0, until)`.
    pub fn count_before(&self, until: SimTime) -> u64 {
        match until.checked_sub(self.phase) {
            Some(d) if d > SimTime::ZERO => (d.ps() - 1) / self.period.ps() + 1,
            _ => 0,
        }
    }

    /// The single emission in the half-open window `[t - period/2, t + period/2)`.
    pub fn emission_near(&self, t: SimTime) -> Option<(u64, SimTime)> {
        let half = self.period.ps() / 2;
        let lo = t.ps().saturating_sub(half);
        let hi = t.ps() + (self.period.ps() - half);
        let first = if lo <= self.phase.ps() {
            0
        } else {
            (lo - self.phase.ps()).div_ceil(self.period.ps())
        };
        let e = self.emission(first);
        (e.ps() < hi).then_some((first, e))
    }
}

/// Per-sensor report suppression.
#[derive(Clone, Debug, Default)]
pub struct HoldOff {
    last: HashMap<(NodeId, NodeId), SimTime>,
}

impl HoldOff {
    /// True if a detection at `t` should be reported (and records it).
    pub fn admit(&mut self, sensor: NodeId, intruder: NodeId, t: SimTime, holdoff: SimTime) -> bool {
        match self.last.get(&(sensor, intruder)) {
            Some(&prev) if t.saturating_sub(prev) < holdoff => false,
            _ => {
                self.last.insert((sensor, intruder), t);
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::crossover_distance;
    use crate::rng::Purpose;

    fn stream() -> RngStream {
        RngStream::new(3, 0, Purpose::Sensing)
    }

    #[test]
    fn doubling_distance_beyond_crossover_costs_12_db() {
        let p = SensingParams::default();
        let dc = crossover_distance(p.emitter_height_m, p.sensor_height_m, p.frequency_hz);
        let d = 2.0 * dc;
        let drop = mean_level(&p, d) - mean_level(&p, 2.0 * d);
        assert!((drop - 40.0 * 2f64.log10()).abs() < 1e-9);
        assert!((drop - 12.04).abs() < 0.01);
    }

    #[test]
    fn near_field_clamped() {
        let p = SensingParams::default();
        assert_eq!(mean_level(&p, 0.0), mean_level(&p, MIN_DISTANCE));
        assert!(mean_level(&p, 0.0) < p.sensing_tx_power_dbm);
    }

    #[test]
    fn fading_varies_level() {
        let p = SensingParams::default();
        let mut s = stream();
        let a = sense_level(&p, 10.0, &mut s);
        let b = sense_level(&p, 10.0, &mut s);
        assert_ne!(a, b);
    }

    #[test]
    fn decision_examples() {
        let p = SensingParams {
            detection_threshold_dbm: -75.0,
            ..SensingParams::default()
        };
        let mut s = stream();
        assert_eq!(sense_decision(-95.0, &p, 1, &mut s), SenseOutcome::MissedBelowSensitivity);
        assert_eq!(sense_decision(-40.0, &p, 2, &mut s), SenseOutcome::MissedCollision);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| sense_decision(-70.0, &p, 1, &mut s) == SenseOutcome::Detected)
            .count();
        let rate = hits as f64 / n as f64;
        let sigma = (0.95 * 0.05 / n as f64).sqrt();
        assert!((rate - 0.95).abs() < 3.0 * sigma, "{rate}");
    }

    #[test]
    fn range_matches_threshold() {
        let p = SensingParams::default();
        let r = sensing_range(&p);
        assert!(in_range(&p, r) && !in_range(&p, r * 1.0001));
        assert!(r > 25.0 && r < 40.0, "{r}");
    }

    #[test]
    fn beacon_schedule() {
        let b = BeaconSchedule {
            phase: SimTime::from_ms(250),
            period: SimTime::from_ms(500),
        };
        // 2 Hz over 10 s
        assert_eq!(b.count_before(SimTime::from_secs(10.0)), 20);
        assert_eq!(b.count_before(SimTime::from_ms(250)), 0);
        assert_eq!(b.count_before(SimTime::from_ms(251)), 1);
        assert_eq!(b.emission_near(SimTime::from_ms(1000)), Some((1, SimTime::from_ms(750))));
        assert_eq!(b.emission_near(SimTime::from_ms(1010)), Some((2, SimTime::from_ms(1250))));
        assert_eq!(b.emission_near(SimTime::ZERO), None);
        let mut s = stream();
        let a = BeaconSchedule::new(SimTime::from_secs(1.0), &mut s);
        let c = BeaconSchedule::new(SimTime::from_secs(1.0), &mut s);
        assert_ne!(a.phase, c.phase);
        assert!(a.phase < a.period);
    }

    #[test]
    fn holdoff_suppresses_repeats() {
        let mut h = HoldOff::default();
        let hold = SimTime::from_secs(1.0);
        assert!(h.admit(1, 9, SimTime::from_ms(100), hold));
        assert!(!h.admit(1, 9, SimTime::from_ms(600), hold));
        assert!(h.admit(2, 9, SimTime::from_ms(600), hold));
        assert!(h.admit(1, 9, SimTime::from_ms(1100), hold));
    }
}
