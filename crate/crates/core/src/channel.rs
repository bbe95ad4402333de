//! Propagation: delay, path loss, block fading, thermal noise and the
//! resulting received power for a link.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SimError};
use crate::rng::RngStream;
use crate::sim::SimTime;

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Path-loss formulas are evaluated no closer than this.
pub const MIN_DISTANCE: f64 = 0.1;

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadioFamily {
    Uwb,
    Oqpsk,
}

impl RadioFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            RadioFamily::Uwb => "uwb",
            RadioFamily::Oqpsk => "oqpsk",
        }
    }
}

impl FromStr for RadioFamily {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uwb" => Ok(RadioFamily::Uwb),
            "oqpsk" => Ok(RadioFamily::Oqpsk),
            other => Err(SimError::invalid("radio.family", format!("unknown radio family `{other}`"))),
        }
    }
}

/// Radio configuration. Defaults come from the two columns of the
/// reference parameter table (TH-IR-UWB and OQPSK).
#[derive(Clone, Debug, PartialEq)]
pub struct RadioParams {
    pub family: RadioFamily,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub throughput_bps: f64,
    pub antenna_height_m: f64,
    pub antenna_gain_db: f64,
    pub noise_figure_db: f64,
    pub temperature_k: f64,
    pub sensitivity_dbm: f64,
    pub rx_threshold_dbm: f64,
    pub tx_power_dbm: f64,
}

impl RadioParams {
    pub fn uwb() -> Self {
        RadioParams {
            family: RadioFamily::Uwb,
            bandwidth_hz: 100e6,
            carrier_hz: 0.8e9,
            throughput_bps: 1e6,
            antenna_height_m: 0.45,
            antenna_gain_db: 3.0,
            noise_figure_db: 5.0,
            temperature_k: 270.0,
            sensitivity_dbm: -85.0,
            rx_threshold_dbm: -80.0,
            tx_power_dbm: -24.318,
        }
    }

    pub fn oqpsk() -> Self {
        RadioParams {
            family: RadioFamily::Oqpsk,
            bandwidth_hz: 2e6,
            carrier_hz: 2.45e9,
            throughput_bps: 250e3,
            antenna_height_m: 0.03,
            antenna_gain_db: 3.0,
            noise_figure_db: 10.0,
            temperature_k: 270.0,
            sensitivity_dbm: -96.0,
            rx_threshold_dbm: -85.0,
            tx_power_dbm: 17.0,
        }
    }

    pub fn for_family(family: RadioFamily) -> Self {
        match family {
            RadioFamily::Uwb => Self::uwb(),
            RadioFamily::Oqpsk => Self::oqpsk(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radio.bandwidth", self.bandwidth_hz),
            ("radio.frequency", self.carrier_hz),
            ("radio.throughput", self.throughput_bps),
            ("radio.antenna_height", self.antenna_height_m),
            ("radio.temperature", self.temperature_k),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::invalid(field, format!("must be positive, got {v}")));
            }
        }
        for (field, v) in [
            ("radio.antenna_gain", self.antenna_gain_db),
            ("radio.noise_figure", self.noise_figure_db),
            ("radio.sensitivity", self.sensitivity_dbm),
            ("radio.rx_threshold", self.rx_threshold_dbm),
            ("radio.tx_power", self.tx_power_dbm),
        ] {
            if !v.is_finite() {
                return Err(SimError::invalid(field, "must be finite"));
            }
        }
        if self.noise_figure_db < 0.0 {
            return Err(SimError::invalid("radio.noise_figure", "must be >= 0 dB"));
        }
        if self.sensitivity_dbm > self.rx_threshold_dbm {
            return Err(SimError::invalid(
                "radio.sensitivity",
                format!(
                    "sensitivity {} dBm exceeds rx threshold {} dBm",
                    self.sensitivity_dbm, self.rx_threshold_dbm
                ),
            ));
        }
        Ok(())
    }

    pub fn bit_time(&self) -> SimTime {
        SimTime::from_secs(1.0 / self.throughput_bps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathLoss {
    FreeSpace,
    TwoRayGround,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fading {
    None,
    /// Linear K-factor (specular / diffuse power).
    Rice { k: f64 },
    Rayleigh,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    pub path_loss: PathLoss,
    pub fading: Fading,
}

impl ChannelModel {
    pub const FREE_SPACE: ChannelModel = ChannelModel {
        path_loss: PathLoss::FreeSpace,
        fading: Fading::None,
    };
    pub const TWO_RAY: ChannelModel = ChannelModel {
        path_loss: PathLoss::TwoRayGround,
        fading: Fading::None,
    };

    pub fn rice(k: f64) -> Self {
        ChannelModel {
            path_loss: PathLoss::FreeSpace,
            fading: Fading::Rice { k },
        }
    }

    pub fn rayleigh() -> Self {
        ChannelModel {
            path_loss: PathLoss::FreeSpace,
            fading: Fading::Rayleigh,
        }
    }

    pub fn has_fading(&self) -> bool {
        !matches!(self.fading, Fading::None)
    }

    pub fn validate(&self) -> Result<()> {
        if let Fading::Rice { k } = self.fading {
            if !(k.is_finite() && k >= 0.0) {
                return Err(SimError::invalid("channel.rice_k", format!("K-factor must be >= 0, got {k}")));
            }
        }
        Ok(())
    }

    /// Deterministic path loss in dB for a link at ground distance `d`.
    pub fn path_loss_db(&self, d: f64, ht: f64, hr: f64, freq: f64) -> f64 {
        let d = d.max(MIN_DISTANCE);
        match self.path_loss {
            PathLoss::FreeSpace => friis_db(d, freq),
            PathLoss::TwoRayGround => two_ray_loss(d, ht, hr, freq),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.path_loss, self.fading) {
            (PathLoss::FreeSpace, Fading::None) => write!(f, "free-space"),
            (PathLoss::TwoRayGround, Fading::None) => write!(f, "two-ray"),
            (_, Fading::Rice { .. }) => write!(f, "rice"),
            (_, Fading::Rayleigh) => write!(f, "rayleigh"),
        }
    }
}

/// Propagation delay `d / c`.
pub fn propagation_delay(distance_m: f64) -> SimTime {
    SimTime::from_secs(distance_m.max(0.0) / SPEED_OF_LIGHT)
}

fn friis_db(d: f64, freq: f64) -> f64 {
    20.0 * (4.0 * PI * d * freq / SPEED_OF_LIGHT).log10()
}

/// Free-space (Friis) loss. Undefined at zero distance; callers on the
/// simulation path go through [`ChannelModel::path_loss_db`], which clamps.
pub fn free_space_loss(distance_m: f64, freq_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(SimError::invalid("distance", "free-space loss is undefined at d <= 0"));
    }
    if !(freq_hz > 0.0) {
        return Err(SimError::invalid("frequency", "must be positive"));
    }
    Ok(friis_db(distance_m, freq_hz))
}

/// Distance beyond which the two-ray model follows the fourth-power law.
pub fn crossover_distance(ht: f64, hr: f64, freq_hz: f64) -> f64 {
    4.0 * PI * ht * hr * freq_hz / SPEED_OF_LIGHT
}

/// Two-ray ground reflection loss; free space inside the crossover distance.
pub fn two_ray_loss(distance_m: f64, ht: f64, hr: f64, freq_hz: f64) -> f64 {
    if distance_m < crossover_distance(ht, hr, freq_hz) {
        friis_db(distance_m, freq_hz)
    } else {
        40.0 * distance_m.log10() - 20.0 * (ht * hr).log10()
    }
}

/// One sample of the power gain `|h|^2`, normalised to unit mean.
pub fn fading_gain(fading: Fading, stream: &mut RngStream) -> f64 {
    match fading {
        Fading::None => 1.0,
        Fading::Rayleigh => {
            // |h|^2 of a unit-power complex Gaussian is Exp(1).
            -(1.0 - stream.uniform01()).ln()
        }
        Fading::Rice { k } => {
            if k.is_infinite() {
                return 1.0;
            }
            let los = (k / (k + 1.0)).sqrt();
            let sigma = (1.0 / (2.0 * (k + 1.0))).sqrt();
            let i = los + sigma * stream.standard_normal();
            let q = sigma * stream.standard_normal();
            i * i + q * q
        }
    }
}

/// Thermal noise `k T B` scaled by the noise figure, in watts. This is the
/// single noise term used in every SINR evaluation.
pub fn noise_power(radio: &RadioParams) -> f64 {
    BOLTZMANN * radio.temperature_k * radio.bandwidth_hz * db_to_linear(radio.noise_figure_db)
}

/// Mean (unfaded) received power in dBm.
pub fn mean_received_dbm(tx: &RadioParams, rx: &RadioParams, distance_m: f64, model: &ChannelModel) -> f64 {
    tx.tx_power_dbm + tx.antenna_gain_db + rx.antenna_gain_db
        - model.path_loss_db(distance_m, tx.antenna_height_m, rx.antenna_height_m, tx.carrier_hz)
}

/// Received power in watts, including one block-fading draw when the model fades.
pub fn received_power(
    tx: &RadioParams,
    rx: &RadioParams,
    distance_m: f64,
    model: &ChannelModel,
    stream: &mut RngStream,
) -> f64 {
    let mean = dbm_to_w(mean_received_dbm(tx, rx, distance_m, model));
    mean * fading_gain(model.fading, stream)
}
