//! Scenario definition: topology, radio stack, traffic and run length.

mod parse;
mod presets;

pub use parse::{parse_scenario, to_text};
pub use presets::{preset, scenario1, scenario2, PRESETS};

use std::path::Path;

use crate::apps::{CbrFlow, CBR_PAYLOAD_BITS, REPORT_PAYLOAD_BITS};
use crate::channel::{propagation_delay, ChannelModel, RadioFamily, RadioParams};
use crate::error::{Result, SimError};
use crate::mac::{CsmaParams, MacConfig, MacVariant};
use crate::node::{Mobility, NodeId, NodeState, Position, Role};
use crate::phy::ber::BerCurve;
use crate::phy::uwb::PulseParams;
use crate::routing::AodvConfig;
use crate::sensing::SensingParams;
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacKind {
    Unslotted,
    Slotted,
    CsmaCa,
}

impl MacKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MacKind::Unslotted => "unslotted",
            MacKind::Slotted => "slotted",
            MacKind::CsmaCa => "csma-ca",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unslotted" => Ok(MacKind::Unslotted),
            "slotted" => Ok(MacKind::Slotted),
            "csma-ca" | "csma" => Ok(MacKind::CsmaCa),
            other => Err(SimError::invalid("mac.variant", format!("unknown MAC variant `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoutingMode {
    Static,
    Aodv,
}

impl RoutingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RoutingMode::Static => "static",
            RoutingMode::Aodv => "aodv",
        }
    }
}

/// MAC settings as configured. Unset timing fields are derived from the
/// radio and packet sizes by [`Scenario::mac_config`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacSettings {
    pub kind: MacKind,
    pub max_retx: u32,
    pub backoff_window: u32,
    pub ack_bits: u32,
    pub queue_limit: usize,
    pub slot: Option<SimTime>,
    pub ack_timeout: Option<SimTime>,
    pub turnaround: Option<SimTime>,
    pub csma: CsmaParams,
}

impl MacSettings {
    pub fn for_family(family: RadioFamily) -> Self {
        MacSettings {
            kind: match family {
                RadioFamily::Uwb => MacKind::Unslotted,
                RadioFamily::Oqpsk => MacKind::CsmaCa,
            },
            max_retx: 4,
            backoff_window: MacConfig::DEFAULT_BACKOFF_WINDOW,
            ack_bits: MacConfig::DEFAULT_ACK_BITS,
            queue_limit: MacConfig::DEFAULT_QUEUE_LIMIT,
            slot: None,
            ack_timeout: None,
            turnaround: None,
            csma: CsmaParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub role: Role,
    pub position: Position,
    pub mobility: Mobility,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSpec {
    pub source: NodeId,
    pub destination: NodeId,
    /// Falls back to the scenario load.
    pub rate_pps: Option<f64>,
    pub start: Option<SimTime>,
    pub stop: Option<SimTime>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub area: (f64, f64),
    pub duration: SimTime,
    /// Default gap between the last generated packet and the end of the run.
    pub drain: SimTime,
    pub seeds: Vec<u64>,
    pub radio: RadioParams,
    pub channel: ChannelModel,
    pub pulse: PulseParams,
    pub ths_length: usize,
    pub ber_curve: BerCurve,
    pub ber_curve_path: Option<String>,
    pub mac: MacSettings,
    pub routing: RoutingMode,
    pub aodv: AodvConfig,
    pub routes: Vec<(NodeId, NodeId, NodeId)>,
    pub sensing: SensingParams,
    pub load_pps: f64,
    pub cbr_bits: u32,
    pub report_bits: u32,
    pub control_bits: u32,
    pub nodes: Vec<NodeSpec>,
    pub flows: Vec<FlowSpec>,
}

impl Scenario {
    pub const DEFAULT_THS_LENGTH: usize = 256;

    pub fn empty(name: &str, family: RadioFamily) -> Self {
        Scenario {
            name: name.to_string(),
            area: (100.0, 100.0),
            duration: SimTime::from_secs(10.0),
            drain: SimTime::from_secs(1.0),
            seeds: vec![1],
            radio: RadioParams::for_family(family),
            channel: ChannelModel::FREE_SPACE,
            pulse: PulseParams::default(),
            ths_length: Self::DEFAULT_THS_LENGTH,
            ber_curve: BerCurve::Analytic,
            ber_curve_path: None,
            mac: MacSettings::for_family(family),
            routing: RoutingMode::Static,
            aodv: AodvConfig::default(),
            routes: Vec::new(),
            sensing: SensingParams::default(),
            load_pps: 1.0,
            cbr_bits: CBR_PAYLOAD_BITS,
            report_bits: REPORT_PAYLOAD_BITS,
            control_bits: 192,
            nodes: Vec::new(),
            flows: Vec::new(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        parse_scenario(&text, path.parent())
    }

    /// A preset name or a scenario file path.
    pub fn load(spec: &str) -> Result<Self> {
        match preset(spec) {
            Ok(s) => Ok(s),
            Err(SimError::UnknownPreset(_)) if Path::new(spec).exists() => Self::from_file(spec),
            Err(e) => Err(e),
        }
    }

    pub fn family(&self) -> RadioFamily {
        self.radio.family
    }

    /// Switches the radio stack, resetting radio and MAC defaults.
    pub fn set_family(&mut self, family: RadioFamily) {
        self.radio = RadioParams::for_family(family);
        let retx = self.mac.max_retx;
        self.mac = MacSettings::for_family(family);
        self.mac.max_retx = retx;
    }

    pub fn with_retx(mut self, retx: u32) -> Self {
        self.mac.max_retx = retx;
        self
    }

    /// Sets every flow to `pps`.
    pub fn with_load(mut self, pps: f64) -> Self {
        self.load_pps = pps;
        for f in &mut self.flows {
            f.rate_pps = None;
        }
        self
    }

    pub fn with_mac(mut self, kind: MacKind) -> Self {
        self.mac.kind = kind;
        self
    }

    pub fn base_station(&self) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.role == Role::BaseStation).map(|n| n.id)
    }

    pub fn node_states(&self) -> Vec<NodeState> {
        self.nodes
            .iter()
            .map(|n| NodeState {
                id: n.id,
                role: n.role,
                home: n.position,
                mobility: n.mobility.clone(),
            })
            .collect()
    }

    pub fn bit_time(&self) -> SimTime {
        match self.family() {
            RadioFamily::Uwb => self.pulse.frame().mul(self.pulse.pulses_per_symbol() as u64),
            RadioFamily::Oqpsk => self.radio.bit_time(),
        }
    }

    pub fn airtime(&self, bits: u32) -> SimTime {
        self.bit_time().mul(bits as u64)
    }

    pub fn max_data_bits(&self) -> u32 {
        self.cbr_bits.max(self.report_bits).max(self.control_bits)
    }

    pub fn max_propagation(&self) -> SimTime {
        propagation_delay(self.area.0.hypot(self.area.1))
    }

    pub fn turnaround(&self) -> SimTime {
        self.mac.turnaround.unwrap_or(match self.family() {
            RadioFamily::Uwb => SimTime::from_ps(self.pulse.frame().ps() / 2),
            RadioFamily::Oqpsk => SimTime::from_us(192),
        })
    }

    pub fn mac_config(&self) -> MacConfig {
        let ack_air = self.airtime(self.mac.ack_bits);
        let turnaround = self.turnaround();
        let guard = match self.family() {
            RadioFamily::Uwb => self.pulse.frame(),
            RadioFamily::Oqpsk => SimTime::from_us(16),
        };
        let variant = match self.mac.kind {
            MacKind::Unslotted => MacVariant::Unslotted,
            MacKind::Slotted => MacVariant::Slotted {
                slot: self.mac.slot.unwrap_or_else(|| {
                    MacConfig::default_slot(self.airtime(self.max_data_bits()), ack_air, guard)
                }),
            },
            MacKind::CsmaCa => MacVariant::CsmaCa,
        };
        MacConfig {
            variant,
            max_retx: self.mac.max_retx,
            ack_timeout: self
                .mac
                .ack_timeout
                .unwrap_or_else(|| MacConfig::default_ack_timeout(turnaround, self.max_propagation(), ack_air)),
            backoff_window: self.mac.backoff_window,
            ack_bits: self.mac.ack_bits,
            turnaround,
            queue_limit: self.mac.queue_limit,
            csma: self.mac.csma,
        }
    }

    pub fn flow_rate(&self, f: &FlowSpec) -> f64 {
        f.rate_pps.unwrap_or(self.load_pps)
    }

    pub fn cbr_flows(&self) -> Vec<CbrFlow> {
        let default_stop = self.duration.saturating_sub(self.drain);
        self.flows
            .iter()
            .map(|f| CbrFlow {
                source: f.source,
                destination: f.destination,
                rate_pps: self.flow_rate(f),
                payload_bits: self.cbr_bits,
                start: f.start.unwrap_or(SimTime::ZERO),
                stop: f.stop.unwrap_or(default_stop),
            })
            .collect()
    }

    /// Sensing runs when the scenario has both intruders and sensors.
    pub fn sensing_enabled(&self) -> bool {
        self.nodes.iter().any(|n| n.role.is_intruder()) && self.nodes.iter().any(|n| n.role == Role::Sensor)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.chars().any(|c| c.is_whitespace() || c == ',') {
            return Err(SimError::invalid("scenario.name", "must be non-empty without spaces or commas"));
        }
        if !(self.area.0 > 0.0 && self.area.1 > 0.0 && self.area.0.is_finite() && self.area.1.is_finite()) {
            return Err(SimError::invalid("scenario.area", "dimensions must be positive"));
        }
        if self.duration == SimTime::ZERO {
            return Err(SimError::invalid("scenario.duration", "must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(SimError::invalid("scenario.seeds", "at least one seed is required"));
        }
        self.radio.validate()?;
        self.channel.validate()?;
        if self.family() == RadioFamily::Uwb {
            self.pulse.check_throughput(self.radio.throughput_bps)?;
        }
        if self.ths_length == 0 {
            return Err(SimError::invalid("pulse.ths_length", "must be at least 1"));
        }
        for (field, v) in [
            ("traffic.cbr_bits", self.cbr_bits),
            ("traffic.report_bits", self.report_bits),
            ("traffic.control_bits", self.control_bits),
        ] {
            if v == 0 {
                return Err(SimError::invalid(field, "must be positive"));
            }
        }
        self.mac_config().validate(self.airtime(self.max_data_bits()))?;
        self.aodv.validate()?;
        self.sensing.validate()?;

        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(SimError::invalid("node", format!("node ids must be 0..{} in order; found {}", self.nodes.len(), n.id)));
            }
            if !n.position.is_finite() || !(n.position.z > 0.0) {
                return Err(SimError::invalid(format!("node.{i}"), "position must be finite with z > 0"));
            }
            n.mobility.validate()?;
        }
        if self.nodes.iter().filter(|n| n.role == Role::BaseStation).count() > 1 {
            return Err(SimError::invalid("node", "at most one base station"));
        }
        let exists = |id: NodeId| id < self.nodes.len();
        for (i, f) in self.flows.iter().enumerate() {
            if !exists(f.source) || !exists(f.destination) {
                return Err(SimError::invalid(format!("flow.{i}"), "unknown endpoint"));
            }
            if self.nodes[f.source].role.is_intruder() || self.nodes[f.destination].role.is_intruder() {
                return Err(SimError::invalid(format!("flow.{i}"), "intruders cannot be flow endpoints"));
            }
        }
        for f in self.cbr_flows() {
            f.validate()?;
        }
        for &(n, d, h) in &self.routes {
            if !exists(n) || !exists(d) || !exists(h) {
                return Err(SimError::invalid("route", format!("route {n} {d} {h} names an unknown node")));
            }
        }
        if self.sensing_enabled() && self.base_station().is_none() {
            return Err(SimError::invalid("node", "sensing needs a base station"));
        }
        Ok(())
    }
}
