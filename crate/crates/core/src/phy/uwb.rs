//! Time-hopping impulse-radio PHY.
//!
//! Each user emits one pulse per frame at chip `c_j` of its hopping code. A
//! receiver anchors its frame grid on the first pulse of the transmission it
//! is locked to; every other concurrent transmission is seen with a relative
//! delay `tau_k`, which shifts its pulses to reception positions
//! `rho_j = (T_c c_j + tau_k) mod T_f`. Positions are quantized to chips, and
//! a pulse of user `k` landing on the same chip as the wanted pulse adds
//! `P_k` to that frame's interference. The resulting per-frame SINR vector
//! drives per-bit Bernoulli errors through a BER curve.

use std::sync::Arc;

use crate::error::{Result, SimError};
use crate::node::NodeId;
use crate::phy::ber::BerCurve;
use crate::phy::PacketDecision;
use crate::rng::{Purpose, RngStream};
use crate::sim::SimTime;

/// Frame and chip geometry of the air interface. The frame duration is
/// always derived as `chips_per_frame * chip`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PulseParams {
    chip: SimTime,
    chips_per_frame: u32,
    pulses_per_symbol: u32,
}

impl Default for PulseParams {
    /// 10 ns chips, 100 chips per frame, one pulse per bit: 1 us frames, 1 Mbps.
    fn default() -> Self {
        PulseParams {
            chip: SimTime::from_ns(10),
            chips_per_frame: 100,
            pulses_per_symbol: 1,
        }
    }
}

impl PulseParams {
    pub fn new(chip: SimTime, chips_per_frame: u32, pulses_per_symbol: u32) -> Result<Self> {
        if chip == SimTime::ZERO {
            return Err(SimError::invalid("pulse.chip_duration", "must be positive"));
        }
        if chips_per_frame < 2 {
            return Err(SimError::invalid("pulse.chips_per_frame", "N_h must be >= 2"));
        }
        if chips_per_frame > u16::MAX as u32 - 1 {
            return Err(SimError::invalid("pulse.chips_per_frame", "N_h too large"));
        }
        if pulses_per_symbol < 1 {
            return Err(SimError::invalid("pulse.pulses_per_symbol", "N_s must be >= 1"));
        }
        Ok(PulseParams {
            chip,
            chips_per_frame,
            pulses_per_symbol,
        })
    }

    pub fn chip(&self) -> SimTime {
        self.chip
    }

    pub fn chips_per_frame(&self) -> u32 {
        self.chips_per_frame
    }

    pub fn pulses_per_symbol(&self) -> u32 {
        self.pulses_per_symbol
    }

    pub fn frame(&self) -> SimTime {
        self.chip.mul(self.chips_per_frame as u64)
    }

    pub fn bit_rate(&self) -> f64 {
        1.0 / (self.pulses_per_symbol as f64 * self.frame().as_secs())
    }

    pub fn frames_for_bits(&self, bits: u32) -> u64 {
        bits as u64 * self.pulses_per_symbol as u64
    }

    pub fn airtime(&self, bits: u32) -> SimTime {
        self.frame().mul(self.frames_for_bits(bits))
    }

    /// Checks the configured throughput against `1 / (N_s T_f)` (0.1 %).
    pub fn check_throughput(&self, throughput_bps: f64) -> Result<()> {
        let rate = self.bit_rate();
        if ((rate - throughput_bps) / throughput_bps).abs() > 1e-3 {
            return Err(SimError::invalid(
                "radio.throughput",
                format!("{throughput_bps} b/s does not match 1/(N_s T_f) = {rate} b/s"),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeHoppingSequence {
    codes: Vec<u16>,
}

impl TimeHoppingSequence {
    pub fn from_codes(codes: Vec<u16>) -> Self {
        assert!(!codes.is_empty(), "hopping sequence cannot be empty");
        TimeHoppingSequence { codes }
    }

    pub fn period(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    #[inline]
    pub fn code(&self, frame: u64) -> u16 {
        self.codes[(frame % self.codes.len() as u64) as usize]
    }
}

/// Pseudo-random code of `length` chips in `[0, n_h)`, fixed by `(seed, node_id)`.
pub fn generate_ths(seed: u64, node_id: NodeId, length: usize, n_h: u32) -> TimeHoppingSequence {
    assert!(length >= 1 && n_h >= 2);
    let mut rng = RngStream::new(seed, node_id as u64, Purpose::HoppingCode);
    TimeHoppingSequence::from_codes((0..length).map(|_| rng.below(n_h as u64) as u16).collect())
}

/// One element of a reception hopping sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceptionChip {
    /// Pulse position inside the receiver frame.
    pub rho: SimTime,
    pub chip: u32,
    /// Set when `T_c c_j + tau` wrapped past the frame end.
    pub wrapped: bool,
}

#[inline]
fn reception_position(code: u16, tau_in_frame: u64, chip_ps: u64, frame_ps: u64) -> ReceptionChip {
    let raw = chip_ps * code as u64 + tau_in_frame;
    let rho = raw % frame_ps;
    ReceptionChip {
        rho: SimTime::from_ps(rho),
        chip: (rho / chip_ps) as u32,
        wrapped: raw >= frame_ps,
    }
}

/// Reception positions `(T_c c_j + tau) mod T_f` over one code period.
pub fn reception_ths(ths: &TimeHoppingSequence, tau: SimTime, pulse: &PulseParams) -> Vec<ReceptionChip> {
    let frame = pulse.frame().ps();
    let tau_in_frame = tau.ps() % frame;
    ths.codes
        .iter()
        .map(|&c| reception_position(c, tau_in_frame, pulse.chip.ps(), frame))
        .collect()
}

/// A transmission as seen by one receiver.
#[derive(Clone, Debug)]
pub struct ActiveTransmission {
    pub source: NodeId,
    pub ths: Arc<TimeHoppingSequence>,
    /// MAC start time at the transmitter.
    pub t_start: SimTime,
    /// Propagation delay plus the transmitter's clock offset.
    pub tau: SimTime,
    pub power_w: f64,
    pub frames: u64,
}

impl ActiveTransmission {
    /// First frame boundary of this transmission at the receiver.
    pub fn arrival(&self) -> SimTime {
        self.t_start + self.tau
    }

    pub fn t_end(&self, pulse: &PulseParams) -> SimTime {
        self.t_start + pulse.frame().mul(self.frames)
    }
}

/// Chips occupied by one user inside one receiver frame. A user whose
/// reception sequence wraps can place two pulses in the same frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChipCell([u16; 2]);

impl ChipCell {
    const NONE: u16 = u16::MAX;
    pub const EMPTY: ChipCell = ChipCell([Self::NONE, Self::NONE]);

    pub fn single(chip: u16) -> Self {
        ChipCell([chip, Self::NONE])
    }

    fn push(&mut self, chip: u16) {
        if self.0[0] == Self::NONE {
            self.0[0] = chip;
        } else {
            self.0[1] = chip;
        }
    }

    pub fn first(&self) -> Option<u16> {
        (self.0[0] != Self::NONE).then_some(self.0[0])
    }

    pub fn chips(&self) -> impl Iterator<Item = u16> + '_ {
        self.0.iter().copied().filter(|&c| c != Self::NONE)
    }

    #[inline]
    pub fn contains(&self, chip: u16) -> bool {
        chip != Self::NONE && (self.0[0] == chip || self.0[1] == chip)
    }
}

/// Per-receiver table of quantized reception chips. Row 0 is the user of
/// interest; columns are that user's frame indices starting at `first_frame`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceMatrix {
    first_frame: u64,
    rows: Vec<Vec<ChipCell>>,
}

impl InterferenceMatrix {
    /// Matrix from explicit single-chip rows (row 0 = user of interest).
    pub fn from_rows(rows: Vec<Vec<u16>>) -> Self {
        let width = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == width), "ragged interference matrix");
        InterferenceMatrix {
            first_frame: 0,
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().map(ChipCell::single).collect())
                .collect(),
        }
    }

    /// Reception chips of `others` relative to the frame grid of `user`,
    /// covering the user's frames `frames.start..frames.end`.
    pub fn build(
        user: &ActiveTransmission,
        others: &[ActiveTransmission],
        pulse: &PulseParams,
        frames: std::ops::Range<u64>,
    ) -> Self {
        let frames = frames.start..frames.end.min(user.frames).max(frames.start);
        let width = (frames.end - frames.start) as usize;
        let chip_ps = pulse.chip.ps();
        let frame_ps = pulse.frame().ps();
        let origin = user.arrival().ps() as i128;

        let mut rows = Vec::with_capacity(1 + others.len());
        // The user of interest sits at tau = 0, so its chips are its code.
        rows.push(
            frames
                .clone()
                .map(|j| ChipCell::single(user.ths.code(j)))
                .collect::<Vec<_>>(),
        );

        for other in others {
            let mut row = vec![ChipCell::EMPTY; width];
            let delta = other.arrival().ps() as i128 - origin;
            let shift = delta.div_euclid(frame_ps as i128) as i64;
            let tau_in_frame = delta.rem_euclid(frame_ps as i128) as u64;
            // pulse j' lands in receiver frame j' + shift + carry, carry in {0, 1}
            let lo = (frames.start as i64 - shift - 1).max(0);
            let hi = (frames.end as i64 - shift).min(other.frames as i64);
            for jp in lo..hi {
                let rc = reception_position(other.ths.code(jp as u64), tau_in_frame, chip_ps, frame_ps);
                let f = jp + shift + rc.wrapped as i64;
                if f >= frames.start as i64 && f < frames.end as i64 {
                    row[(f - frames.start as i64) as usize].push(rc.chip as u16);
                }
            }
            rows.push(row);
        }
        InterferenceMatrix {
            first_frame: frames.start,
            rows,
        }
    }

    pub fn first_frame(&self) -> u64 {
        self.first_frame
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn cell(&self, row: usize, column: usize) -> ChipCell {
        self.rows[row][column]
    }

    /// For every interferer (rows 1..), the frame indices where one of its
    /// pulses shares the wanted pulse's chip.
    pub fn colliding_frames(&self) -> Vec<Vec<u64>> {
        let Some(user) = self.rows.first() else {
            return Vec::new();
        };
        self.rows[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .zip(user)
                    .enumerate()
                    .filter(|(_, (cell, u))| u.first().is_some_and(|c| cell.contains(c)))
                    .map(|(j, _)| self.first_frame + j as u64)
                    .collect()
            })
            .collect()
    }

    /// Per-frame SINR of the user of interest. `powers[0]` is the wanted
    /// signal, `powers[k]` the received power of row `k`.
    pub fn sinr_vector(&self, powers: &[f64], noise_w: f64) -> SinrVector {
        assert_eq!(powers.len(), self.rows.len(), "one power per matrix row");
        let signal = powers[0];
        let mut interference = vec![0.0f64; self.width()];
        for (k, frames) in self.colliding_frames().into_iter().enumerate() {
            for j in frames {
                interference[(j - self.first_frame) as usize] += powers[k + 1];
            }
        }
        SinrVector {
            first_frame: self.first_frame,
            values: interference.into_iter().map(|i| signal / (noise_w + i)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinrVector {
    pub first_frame: u64,
    pub values: Vec<f64>,
}

impl SinrVector {
    pub fn uniform(first_frame: u64, frames: usize, value: f64) -> Self {
        SinrVector {
            first_frame,
            values: vec![value; frames],
        }
    }
}

/// Per-bit Bernoulli decision. Each bit combines the SINR of its `N_s`
/// frames coherently; the packet survives only if no bit flips.
pub fn decide_packet(
    sinr: &SinrVector,
    pulse: &PulseParams,
    bits: u32,
    curve: &BerCurve,
    stream: &mut RngStream,
) -> PacketDecision {
    let ns = pulse.pulses_per_symbol as usize;
    assert!(
        sinr.values.len() >= bits as usize * ns,
        "SINR vector does not cover the packet"
    );
    let mut cached: Option<(f64, f64)> = None;
    for (b, frames) in sinr.values.chunks_exact(ns).take(bits as usize).enumerate() {
        let snr: f64 = frames.iter().sum();
        let ber = match cached {
            Some((s, p)) if s == snr => p,
            _ => {
                let p = curve.ber(snr);
                cached = Some((snr, p));
                p
            }
        };
        if stream.bernoulli(ber) {
            return PacketDecision::Corrupted { first_bad_bit: b as u32 };
        }
    }
    PacketDecision::Delivered
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse_8() -> PulseParams {
        PulseParams::new(SimTime::from_ns(10), 8, 1).unwrap()
    }

    fn tx(source: NodeId, codes: Vec<u16>, t_start: SimTime, tau: SimTime, frames: u64) -> ActiveTransmission {
        ActiveTransmission {
            source,
            ths: Arc::new(TimeHoppingSequence::from_codes(codes)),
            t_start,
            tau,
            power_w: 1e-9,
            frames,
        }
    }

    #[test]
    fn default_geometry_is_one_mbps() {
        let p = PulseParams::default();
        assert_eq!(p.frame(), SimTime::from_us(1));
        p.check_throughput(1e6).unwrap();
        assert!(p.check_throughput(0.25e6).is_err());
        assert!(PulseParams::new(SimTime::from_ns(10), 1, 1).is_err());
        assert!(PulseParams::new(SimTime::from_ns(10), 8, 0).is_err());
    }

    #[test]
    fn ths_deterministic_and_in_range() {
        let a = generate_ths(9, 4, 500, 16);
        let b = generate_ths(9, 4, 500, 16);
        assert_eq!(a, b);
        assert!(a.codes().iter().all(|&c| c < 16));
        assert_ne!(a, generate_ths(9, 5, 500, 16));
    }

    #[test]
    fn reception_identity_at_zero_delay() {
        let ths = TimeHoppingSequence::from_codes(vec![0, 3, 7, 2]);
        let r = reception_ths(&ths, SimTime::ZERO, &pulse_8());
        for (rc, &c) in r.iter().zip(ths.codes()) {
            assert_eq!(rc.chip, c as u32);
            assert_eq!(rc.rho, SimTime::from_ns(10 * c as u64));
        }
    }

    #[test]
    fn reception_examples() {
        let p = pulse_8();
        let r = reception_ths(&TimeHoppingSequence::from_codes(vec![2]), SimTime::from_ns(45), &p);
        assert_eq!(r[0].rho, SimTime::from_ns(65));
        assert_eq!(r[0].chip, 6);
        let r = reception_ths(&TimeHoppingSequence::from_codes(vec![7]), SimTime::from_ns(35), &p);
        assert_eq!(r[0].rho, SimTime::from_ns(25));
        assert_eq!(r[0].chip, 2);
        assert!(r[0].wrapped);
    }

    #[test]
    fn single_user_matrix_has_one_row() {
        let u = tx(0, vec![1, 2, 3], SimTime::ZERO, SimTime::ZERO, 3);
        let m = InterferenceMatrix::build(&u, &[], &pulse_8(), 0..3);
        assert_eq!(m.row_count(), 1);
        assert!(m.colliding_frames().is_empty());
    }

    #[test]
    fn whole_frame_offset_with_same_code_collides_everywhere() {
        let p = pulse_8();
        let codes = vec![3, 1, 4, 1, 5, 2, 6, 5];
        let u = tx(0, codes.clone(), SimTime::ZERO, SimTime::ZERO, 64);
        // period 8 frames, offset exactly 8 frames: identical chip pattern
        let o = tx(1, codes, SimTime::ZERO, p.frame().mul(8), 64);
        let m = InterferenceMatrix::build(&u, &[o], &p, 0..64);
        let hits = &m.colliding_frames()[0];
        assert_eq!(hits.len(), 56);
        assert_eq!(hits.first(), Some(&8));
    }

    #[test]
    fn half_chip_offset_lands_on_same_or_next_chip() {
        let p = pulse_8();
        let codes = vec![3, 1, 4, 0, 6, 2, 5, 7];
        let u = tx(0, codes.clone(), SimTime::ZERO, SimTime::ZERO, 8);
        let o = tx(1, codes, SimTime::ZERO, SimTime::from_ns(5), 8);
        let m = InterferenceMatrix::build(&u, &[o], &p, 0..8);
        for j in 0..8 {
            let wanted = m.cell(0, j).first().unwrap();
            for c in m.cell(1, j).chips() {
                assert!(c == wanted || c == (wanted + 1) % 8, "frame {j}: {c} vs {wanted}");
            }
        }
        // floor(5 ns / 10 ns) = 0: every pulse stays in the wanted chip
        assert_eq!(m.colliding_frames()[0].len(), 8);
    }

    #[test]
    fn positional_collisions() {
        let m = InterferenceMatrix::from_rows(vec![vec![3, 1, 4], vec![3, 2, 4]]);
        assert_eq!(m.colliding_frames(), vec![vec![0, 2]]);
    }

    #[test]
    fn sinr_examples() {
        let alone = InterferenceMatrix::from_rows(vec![vec![3, 1, 4]]);
        let s = alone.sinr_vector(&[1e-9], 5e-10);
        assert!(s.values.iter().all(|&v| v == 2.0));

        let hit = InterferenceMatrix::from_rows(vec![vec![3, 1, 4], vec![0, 1, 0]]);
        let s = hit.sinr_vector(&[1e-9, 5e-10], 5e-10);
        assert_eq!(s.values, vec![2.0, 1.0, 2.0]);

        let miss = InterferenceMatrix::from_rows(vec![vec![3, 1, 4], vec![0, 0, 0]]);
        assert_eq!(miss.sinr_vector(&[1e-9, 5e-10], 5e-10), alone.sinr_vector(&[1e-9], 5e-10));
    }

    #[test]
    fn decisions_at_extremes() {
        let p = PulseParams::default();
        let mut rng = RngStream::new(3, 0, Purpose::BitErrors);
        let clean = SinrVector::uniform(0, 100, 1e6);
        for _ in 0..100 {
            assert_eq!(decide_packet(&clean, &p, 100, &BerCurve::Analytic, &mut rng), PacketDecision::Delivered);
        }
        let dead = SinrVector::uniform(0, 100, 0.0);
        let delivered = (0..1000)
            .filter(|_| decide_packet(&dead, &p, 100, &BerCurve::Analytic, &mut rng) == PacketDecision::Delivered)
            .count();
        assert_eq!(delivered, 0);
    }

    #[test]
    fn pulses_combine_per_bit() {
        let p = PulseParams::new(SimTime::from_ns(10), 100, 2).unwrap();
        let sinr = SinrVector::uniform(0, 20_000, 1.0);
        let mut rng = RngStream::new(5, 0, Purpose::BitErrors);
        // one-bit packets: error rate is Q(sqrt(2 * 2)) = Q(2)
        let trials = 200_000;
        let errors = (0..trials)
            .filter(|_| decide_packet(&sinr, &p, 1, &BerCurve::Analytic, &mut rng) != PacketDecision::Delivered)
            .count();
        let rate = errors as f64 / trials as f64;
        assert!((rate - 0.02275).abs() < 0.0015, "{rate}");
    }
}
