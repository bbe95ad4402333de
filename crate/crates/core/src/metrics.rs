//! Run metrics, computed by folding over the application-level records a
//! run produces. The fold is pure: the same records always give the same
//! metrics.

use std::collections::{BTreeMap, HashSet};

use crate::node::NodeId;
use crate::packet::BeaconId;
use crate::sensing::{SenseOutcome, SensingEvent};
use crate::sim::SimTime;

#[derive(Clone, Debug, PartialEq)]
pub enum Record {
    CbrSent { t: SimTime, flow: usize, uid: u64, bits: u32 },
    CbrReceived { t: SimTime, flow: usize, uid: u64, bits: u32, created_at: SimTime, hops: Vec<NodeId> },
    Beacon { t: SimTime, beacon: BeaconId, sensors_in_range: u32 },
    Sensed(SensingEvent),
    DetectSent { t: SimTime, sensor: NodeId, beacon: BeaconId },
    DetectReceived { t: SimTime, sensor: NodeId, beacon: BeaconId, emitted_at: SimTime, hops: Vec<NodeId> },
    AuthReqSent { t: SimTime, req_id: u64, sensor: NodeId, intruder: NodeId },
    AuthRespSent { t: SimTime, req_id: u64, sensor: NodeId, intruder: NodeId },
    AuthNotifySent { t: SimTime, req_id: u64, sensor: NodeId, intruder: NodeId },
    AuthNotifyReceived { t: SimTime, req_id: u64, sensor: NodeId, intruder: NodeId },
    Dropped { t: SimTime, node: NodeId, uid: u64, cause: &'static str },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlowMetrics {
    pub sent_packets: u64,
    pub sent_bits: u64,
    pub received_packets: u64,
    pub received_bits: u64,
    /// Sum of end-to-end delays in picoseconds.
    pub delay_sum_ps: u128,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub flows: Vec<FlowMetrics>,
    pub beacons_emitted: u64,
    pub beacons_in_range: u64,
    /// (beacon, in-range sensor) pairs, one sensing event each.
    pub sensing_events: u64,
    pub detected: u64,
    pub missed_below_sensitivity: u64,
    pub missed_probabilistic: u64,
    pub missed_collision: u64,
    pub detect_sent: u64,
    pub detect_received: u64,
    /// Distinct in-range beacons with at least one DETECT at the base.
    pub beacons_notified: u64,
    pub auth_req_sent: u64,
    pub auth_resp_sent: u64,
    pub auth_notify_sent: u64,
    pub auth_notify_received: u64,
    /// Seconds from beacon emission to DETECT reception at the base.
    pub detection_latencies: Vec<f64>,
    pub drops: BTreeMap<&'static str, u64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_records(records: &[Record]) -> Metrics {
        let mut m = Metrics::default();
        let mut notified: HashSet<BeaconId> = HashSet::new();
        let flow = |m: &mut Metrics, f: usize| -> usize {
            if m.flows.len() <= f {
                m.flows.resize(f + 1, FlowMetrics::default());
            }
            f
        };
        for r in records {
            match r {
                Record::CbrSent { flow: f, bits, .. } => {
                    let i = flow(&mut m, *f);
                    m.flows[i].sent_packets += 1;
                    m.flows[i].sent_bits += *bits as u64;
                }
                Record::CbrReceived { t, flow: f, bits, created_at, .. } => {
                    let i = flow(&mut m, *f);
                    m.flows[i].received_packets += 1;
                    m.flows[i].received_bits += *bits as u64;
                    m.flows[i].delay_sum_ps += (*t - *created_at).ps() as u128;
                }
                Record::Beacon { sensors_in_range, .. } => {
                    m.beacons_emitted += 1;
                    if *sensors_in_range > 0 {
                        m.beacons_in_range += 1;
                    }
                }
                Record::Sensed(e) => {
                    m.sensing_events += 1;
                    match e.outcome {
                        SenseOutcome::Detected => m.detected += 1,
                        SenseOutcome::MissedBelowSensitivity => m.missed_below_sensitivity += 1,
                        SenseOutcome::MissedProbabilistic => m.missed_probabilistic += 1,
                        SenseOutcome::MissedCollision => m.missed_collision += 1,
                    }
                }
                Record::DetectSent { .. } => m.detect_sent += 1,
                Record::DetectReceived { t, beacon, emitted_at, .. } => {
                    m.detect_received += 1;
                    if notified.insert(*beacon) {
                        m.beacons_notified += 1;
                    }
                    m.detection_latencies.push((*t - *emitted_at).as_secs());
                }
                Record::AuthReqSent { .. } => m.auth_req_sent += 1,
                Record::AuthRespSent { .. } => m.auth_resp_sent += 1,
                Record::AuthNotifySent { .. } => m.auth_notify_sent += 1,
                Record::AuthNotifyReceived { .. } => m.auth_notify_received += 1,
                Record::Dropped { cause, .. } => *m.drops.entry(cause).or_insert(0) += 1,
            }
        }
        m
    }

    fn flow_totals(&self, flow: Option<usize>) -> FlowMetrics {
        match flow {
            Some(f) => self.flows.get(f).copied().unwrap_or_default(),
            None => self.flows.iter().fold(FlowMetrics::default(), |a, f| FlowMetrics {
                sent_packets: a.sent_packets + f.sent_packets,
                sent_bits: a.sent_bits + f.sent_bits,
                received_packets: a.received_packets + f.received_packets,
                received_bits: a.received_bits + f.received_bits,
                delay_sum_ps: a.delay_sum_ps + f.delay_sum_ps,
            }),
        }
    }

    /// Received over sent CBR bytes; `None` when nothing was sent.
    pub fn packet_delivery_ratio(&self, flow: Option<usize>) -> Option<f64> {
        let t = self.flow_totals(flow);
        ratio(t.received_bits, t.sent_bits)
    }

    /// Mean generation-to-reception delay over delivered CBR packets.
    pub fn avg_end_to_end_delay(&self, flow: Option<usize>) -> Option<f64> {
        let t = self.flow_totals(flow);
        (t.received_packets > 0).then(|| t.delay_sum_ps as f64 / t.received_packets as f64 / 1e12)
    }

    /// DETECT reports received at the base per in-range sensing event.
    pub fn detection_rate(&self) -> Option<f64> {
        ratio(self.detect_received, self.sensing_events)
    }

    /// Fraction of in-range beacons reported by at least one sensor.
    pub fn beacon_detection_rate(&self) -> Option<f64> {
        ratio(self.beacons_notified, self.beacons_in_range)
    }

    pub fn authentication_rate(&self) -> Option<f64> {
        ratio(self.auth_notify_received, self.auth_req_sent)
    }

    pub fn mean_detection_latency(&self) -> Option<f64> {
        let n = self.detection_latencies.len();
        (n > 0).then(|| self.detection_latencies.iter().sum::<f64>() / n as f64)
    }

    /// Nearest-rank 95th percentile.
    pub fn p95_detection_latency(&self) -> Option<f64> {
        percentile(&self.detection_latencies, 0.95)
    }

    pub fn total_drops(&self) -> u64 {
        self.drops.values().sum()
    }
}

/// Nearest-rank percentile, `q` in `(0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    Some(v[rank.min(v.len()) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(flow: usize, uid: u64) -> Record {
        Record::CbrSent {
            t: SimTime::ZERO,
            flow,
            uid,
            bits: 512,
        }
    }

    fn received(flow: usize, uid: u64, created: f64, t: f64) -> Record {
        Record::CbrReceived {
            t: SimTime::from_secs(t),
            flow,
            uid,
            bits: 512,
            created_at: SimTime::from_secs(created),
            hops: vec![],
        }
    }

    #[test]
    fn pdr_examples() {
        let mut recs: Vec<Record> = (0..1000).map(|u| sent(0, u)).collect();
        recs.extend((0..501).map(|u| received(0, u, 0.0, 0.001)));
        let m = Metrics::from_records(&recs);
        assert!((m.packet_delivery_ratio(None).unwrap() - 0.501).abs() < 1e-12);

        let m = Metrics::from_records(&[sent(0, 1)]);
        assert_eq!(m.packet_delivery_ratio(Some(0)), Some(0.0));
        assert_eq!(m.avg_end_to_end_delay(None), None);
        assert_eq!(Metrics::from_records(&[]).packet_delivery_ratio(None), None);
    }

    #[test]
    fn single_delay_sample() {
        let m = Metrics::from_records(&[sent(0, 1), received(0, 1, 1.0, 1.0012)]);
        assert!((m.avg_end_to_end_delay(None).unwrap() - 1.2e-3).abs() < 1e-12);
        assert_eq!(m.packet_delivery_ratio(None), Some(1.0));
    }

    #[test]
    fn detection_ratio_arithmetic() {
        let mut m = Metrics {
            sensing_events: 200,
            detect_received: 150,
            ..Metrics::default()
        };
        assert_eq!(m.detection_rate(), Some(0.75));
        m.auth_req_sent = 10;
        assert_eq!(m.authentication_rate(), Some(0.0));
        assert_eq!(Metrics::default().detection_rate(), None);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        assert_eq!(percentile(&v, 0.95), Some(95.0));
        assert_eq!(percentile(&[3.0], 0.95), Some(3.0));
        assert_eq!(percentile(&[], 0.95), None);
    }

    #[test]
    fn fold_is_pure() {
        let recs = vec![sent(0, 1), sent(1, 2), received(1, 2, 0.5, 0.75)];
        assert_eq!(Metrics::from_records(&recs), Metrics::from_records(&recs));
    }
}
