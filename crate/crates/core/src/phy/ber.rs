//! Bit-error-rate versus SNR curves.
//!
//! A curve is either the analytic coherent antipodal law `Q(sqrt(2 snr))`
//! or a measured table loaded from a text file with one `snr_db,ber` pair per
//! line. Tables are interpolated linearly in `(snr_db, log10 ber)`.

use std::path::Path;

use crate::error::{Result, SimError};

pub const BER_CAP: f64 = 0.5;
pub const BER_FLOOR: f64 = 1e-12;

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Debug, PartialEq)]
pub enum BerCurve {
    Analytic,
    Table(Vec<(f64, f64)>),
}

impl Default for BerCurve {
    fn default() -> Self {
        BerCurve::Analytic
    }
}

impl BerCurve {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| SimError::BerCurve {
                line: line_no,
                reason: reason.to_string(),
            };
            let (snr, ber) = line.split_once(',').ok_or_else(|| err("expected `snr_db,ber`"))?;
            let snr: f64 = snr.trim().parse().map_err(|_| err("SNR is not a number"))?;
            let ber: f64 = ber.trim().parse().map_err(|_| err("BER is not a number"))?;
            if !snr.is_finite() {
                return Err(err("SNR must be finite"));
            }
            if !(ber > 0.0 && ber <= 1.0) {
                return Err(err("BER must be in (0, 1]"));
            }
            if let Some(&(prev, _)) = points.last() {
                if snr <= prev {
                    return Err(err("SNR column must be strictly increasing"));
                }
            }
            points.push((snr, ber));
        }
        if points.is_empty() {
            return Err(SimError::BerCurve {
                line: 0,
                reason: "curve has no data points".into(),
            });
        }
        Ok(BerCurve::Table(points))
    }

    /// Bit error probability at linear SNR `snr`.
    pub fn ber(&self, snr: f64) -> f64 {
        let snr = snr.max(0.0);
        match self {
            BerCurve::Analytic => q_function((2.0 * snr).sqrt()).clamp(BER_FLOOR, BER_CAP),
            BerCurve::Table(points) => table_lookup(points, snr),
        }
    }
}

fn table_lookup(points: &[(f64, f64)], snr: f64) -> f64 {
    if snr <= 0.0 {
        return BER_CAP;
    }
    let snr_db = 10.0 * snr.log10();
    let first = points[0];
    if snr_db < first.0 {
        return BER_CAP;
    }
    let log_ber = if points.len() == 1 {
        first.1.log10()
    } else {
        let i = points.partition_point(|p| p.0 <= snr_db);
        // segment [i-1, i]; past the end reuse the last segment's slope
        let (a, b) = if i >= points.len() {
            (points[points.len() - 2], points[points.len() - 1])
        } else {
            (points[i - 1], points[i])
        };
        let t = (snr_db - a.0) / (b.0 - a.0);
        let (la, lb) = (a.1.log10(), b.1.log10());
        la + t * (lb - la)
    };
    10f64.powf(log_ber).clamp(BER_FLOOR, BER_CAP)
}
