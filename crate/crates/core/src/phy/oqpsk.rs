//! Narrowband OQPSK baseline: interference is the plain sum of overlapping
//! received powers, piecewise constant between arrival boundaries.

use crate::phy::ber::BerCurve;
use crate::phy::{Arrival, PacketDecision};
use crate::rng::RngStream;
use crate::sim::SimTime;

#[derive(Clone, Debug)]
pub struct NarrowbandReception {
    pub start: SimTime,
    pub end: SimTime,
    pub signal_w: f64,
    pub noise_w: f64,
    /// `(start, end, power)` of every overlapping interferer.
    pub interferers: Vec<(SimTime, SimTime, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: SimTime,
    pub end: SimTime,
    pub sinr: f64,
}

impl NarrowbandReception {
    pub fn new(signal: &Arrival, interferers: &[Arrival], noise_w: f64) -> Self {
        NarrowbandReception {
            start: signal.start,
            end: signal.end,
            signal_w: signal.power_w,
            noise_w,
            interferers: interferers.iter().map(|a| (a.start, a.end, a.power_w)).collect(),
        }
    }
}

/// SINR segments covering the reception; boundaries fall exactly on the
/// interferers' start and end instants.
pub fn narrowband_sinr(rx: &NarrowbandReception) -> Vec<Segment> {
    let mut cuts = vec![rx.start, rx.end];
    for &(s, e, _) in &rx.interferers {
        for t in [s, e] {
            if t > rx.start && t < rx.end {
                cuts.push(t);
            }
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let interference: f64 = rx
                .interferers
                .iter()
                .filter(|&&(s, e, _)| s < b && e > a)
                .map(|&(_, _, p)| p)
                .sum();
            Segment {
                start: a,
                end: b,
                sinr: rx.signal_w / (rx.noise_w + interference),
            }
        })
        .collect()
}

/// Per-bit Bernoulli decision; each bit takes the SINR of the segment that
/// contains its midpoint.
pub fn decide_packet_nb(
    rx: &NarrowbandReception,
    bits: u32,
    bit_time: SimTime,
    curve: &BerCurve,
    stream: &mut RngStream,
) -> PacketDecision {
    let segments = narrowband_sinr(rx);
    let mut seg = 0usize;
    let mut cached: Option<(usize, f64)> = None;
    for b in 0..bits {
        let mid = rx.start + bit_time.mul(b as u64) + SimTime::from_ps(bit_time.ps() / 2);
        while seg + 1 < segments.len() && segments[seg].end <= mid {
            seg += 1;
        }
        let ber = match cached {
            Some((s, p)) if s == seg => p,
            _ => {
                let p = curve.ber(segments[seg].sinr);
                cached = Some((seg, p));
                p
            }
        };
        if stream.bernoulli(ber) {
            return PacketDecision::Corrupted { first_bad_bit: b };
        }
    }
    PacketDecision::Delivered
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    fn reception(interferers: Vec<(SimTime, SimTime, f64)>) -> NarrowbandReception {
        NarrowbandReception {
            start: SimTime::ZERO,
            end: SimTime::from_us(2048),
            signal_w: 1e-9,
            noise_w: 1e-13,
            interferers,
        }
    }

    #[test]
    fn clean_reception_single_segment() {
        let segs = narrowband_sinr(&reception(vec![]));
        assert_eq!(segs.len(), 1);
        assert!((segs[0].sinr - 1e4).abs() < 1e-6);
    }

    #[test]
    fn equal_power_interferer() {
        let segs = narrowband_sinr(&reception(vec![(SimTime::ZERO, SimTime::from_us(4000), 1e-9)]));
        assert!((segs[0].sinr - 1e-9 / (1e-13 + 1e-9)).abs() < 1e-15);
        assert!((segs[0].sinr - 1.0).abs() < 1e-3);
    }

    #[test]
    fn departing_interferer_splits_segments() {
        let segs = narrowband_sinr(&reception(vec![(SimTime::ZERO, SimTime::from_us(1000), 1e-10)]));
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].end, SimTime::from_us(1000));
        assert!(segs[1].sinr > segs[0].sinr);
    }

    #[test]
    fn high_snr_delivers() {
        let mut rng = RngStream::new(1, 0, Purpose::BitErrors);
        let rx = reception(vec![]);
        let d = decide_packet_nb(&rx, 512, SimTime::from_us(4), &BerCurve::Analytic, &mut rng);
        assert_eq!(d, PacketDecision::Delivered);
    }

    #[test]
    fn full_collision_kills_packets() {
        let mut rng = RngStream::new(2, 0, Purpose::BitErrors);
        let rx = reception(vec![(SimTime::ZERO, SimTime::from_us(4000), 1e-9)]);
        let delivered = (0..10_000)
            .filter(|_| decide_packet_nb(&rx, 256, SimTime::from_us(4), &BerCurve::Analytic, &mut rng).is_delivered())
            .count();
        assert!((delivered as f64 / 1e4) < 1e-3, "{delivered}");
    }
}
