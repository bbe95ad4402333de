//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! scenario.name = demo
//! radio.family = uwb
//! mac.variant = slotted
//! node.0 = base 50 50
//! node.1 = sensor 60 50 0.45 waypoint 1.0 60,50 70,50
//! flow.0 = 1 0 2.5
//! route 1 0 0
//! ```
//!
//! Times are in seconds, powers in dBm, distances in meters. A node line's
//! antenna height defaults to the radio's.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{ChannelModel, Fading, PathLoss, RadioFamily};
use crate::error::{Result, SimError};
use crate::node::{Mobility, Position, Role};
use crate::phy::ber::BerCurve;
use crate::phy::uwb::PulseParams;
use crate::scenario::{FlowSpec, MacKind, NodeSpec, RoutingMode, Scenario};
use crate::sim::SimTime;

fn syntax(line: usize, reason: impl Into<String>) -> SimError {
    SimError::Syntax {
        line,
        reason: reason.into(),
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| SimError::invalid(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(SimError::invalid(key, "must be finite"));
    }
    Ok(x)
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| SimError::invalid(key, format!("`{v}` is not a non-negative integer")))
}

fn secs(key: &str, v: &str) -> Result<SimTime> {
    let x = num(key, v)?;
    if x < 0.0 {
        return Err(SimError::invalid(key, "time must be >= 0"));
    }
    Ok(SimTime::from_secs(x))
}

fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    let v = v.trim();
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (int("scenario.seeds", a)?, int("scenario.seeds", b)?);
        if a > b {
            return Err(SimError::invalid("scenario.seeds", "empty range"));
        }
        return Ok((a..=b).collect());
    }
    v.split(',').map(|s| int("scenario.seeds", s)).collect()
}

fn parse_node(s: &mut Scenario, id: usize, v: &str) -> Result<bool> {
    let field = format!("node.{id}");
    let toks: Vec<&str> = v.split_whitespace().collect();
    if toks.len() < 3 {
        return Err(SimError::invalid(&field, "expected `<role> <x> <y> [z] [static | waypoint <speed> x,y ...]`"));
    }
    let role: Role = toks[0].parse()?;
    let x = num(&field, toks[1])?;
    let y = num(&field, toks[2])?;
    let mut i = 3;
    let mut z = None;
    if let Some(t) = toks.get(3) {
        if t.parse::<f64>().is_ok() {
            z = Some(num(&field, t)?);
            i = 4;
        }
    }
    let mobility = match toks.get(i).copied() {
        None | Some("static") => {
            if toks.len() > i + 1 {
                return Err(SimError::invalid(&field, "unexpected tokens after `static`"));
            }
            Mobility::Static
        }
        Some("waypoint") => {
            let speed = num(&field, toks.get(i + 1).ok_or_else(|| SimError::invalid(&field, "missing speed"))?)?;
            let points = toks[i + 2..]
                .iter()
                .map(|p| {
                    let (a, b) = p
                        .split_once(',')
                        .ok_or_else(|| SimError::invalid(&field, format!("waypoint `{p}` is not `x,y`")))?;
                    Ok((num(&field, a)?, num(&field, b)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Mobility::Waypoints { speed, points }
        }
        Some(other) => return Err(SimError::invalid(&field, format!("unknown mobility `{other}`"))),
    };
    let spec = NodeSpec {
        id,
        role,
        position: Position::new(x, y, z.unwrap_or(s.radio.antenna_height_m)),
        mobility,
    };
    match s.nodes.iter_mut().find(|n| n.id == id) {
        Some(n) => *n = spec,
        None => s.nodes.push(spec),
    }
    Ok(z.is_none())
}

fn parse_flow(s: &mut Scenario, n: usize, v: &str) -> Result<()> {
    let field = format!("flow.{n}");
    let toks: Vec<&str> = v.split_whitespace().collect();
    if !(2..=5).contains(&toks.len()) {
        return Err(SimError::invalid(&field, "expected `<src> <dst> [rate] [start] [stop]`"));
    }
    let opt_secs = |i: usize| toks.get(i).map(|t| secs(&field, t)).transpose();
    let spec = FlowSpec {
        source: int(&field, toks[0])?,
        destination: int(&field, toks[1])?,
        rate_pps: toks.get(2).map(|t| num(&field, t)).transpose()?,
        start: opt_secs(3)?,
        stop: opt_secs(4)?,
    };
    if n > s.flows.len() {
        return Err(SimError::invalid(&field, format!("flows must be numbered consecutively from 0; expected flow.{}", s.flows.len())));
    }
    if n == s.flows.len() {
        s.flows.push(spec);
    } else {
        s.flows[n] = spec;
    }
    Ok(())
}

fn parse_route(s: &mut Scenario, v: &str) -> Result<()> {
    let toks: Vec<&str> = v.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(SimError::invalid("route", "expected `<node> <dest> <next_hop>`"));
    }
    let r = (int("route", toks[0])?, int("route", toks[1])?, int("route", toks[2])?);
    s.routes.retain(|&(n, d, _)| (n, d) != (r.0, r.1));
    s.routes.push(r);
    Ok(())
}

impl Scenario {
    /// Applies one `key = value` setting. Relative BER-curve paths resolve
    /// against `base_dir`.
    pub fn apply(&mut self, key: &str, value: &str, base_dir: Option<&Path>) -> Result<()> {
        self.apply_inner(key, value, base_dir).map(|_| ())
    }

    /// Returns true for node lines that took the default antenna height.
    fn apply_inner(&mut self, key: &str, value: &str, base_dir: Option<&Path>) -> Result<bool> {
        let v = value.trim();
        if let Some(id) = key.strip_prefix("node.") {
            let id: usize = int(key, id)?;
            return parse_node(self, id, v);
        }
        if let Some(n) = key.strip_prefix("flow.") {
            parse_flow(self, int(key, n)?, v)?;
            return Ok(false);
        }
        match key {
            "route" => parse_route(self, v)?,
            "scenario.name" => self.name = v.to_string(),
            "scenario.area" => {
                let parts: Vec<&str> = v.split(|c: char| c == 'x' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
                if parts.len() != 2 {
                    return Err(SimError::invalid(key, "expected `<width> <height>`"));
                }
                self.area = (num(key, parts[0])?, num(key, parts[1])?);
            }
            "scenario.duration" => self.duration = secs(key, v)?,
            "scenario.drain" => self.drain = secs(key, v)?,
            "scenario.seeds" => self.seeds = parse_seeds(v)?,

            "radio.family" => self.set_family(v.parse::<RadioFamily>()?),
            "radio.bandwidth" => self.radio.bandwidth_hz = num(key, v)?,
            "radio.frequency" => self.radio.carrier_hz = num(key, v)?,
            "radio.throughput" => self.radio.throughput_bps = num(key, v)?,
            "radio.antenna_height" => self.radio.antenna_height_m = num(key, v)?,
            "radio.antenna_gain" => self.radio.antenna_gain_db = num(key, v)?,
            "radio.noise_figure" => self.radio.noise_figure_db = num(key, v)?,
            "radio.temperature" => self.radio.temperature_k = num(key, v)?,
            "radio.sensitivity" => self.radio.sensitivity_dbm = num(key, v)?,
            "radio.rx_threshold" => self.radio.rx_threshold_dbm = num(key, v)?,
            "radio.tx_power" => self.radio.tx_power_dbm = num(key, v)?,

            "channel.path_loss" => {
                self.channel.path_loss = match v {
                    "free-space" => PathLoss::FreeSpace,
                    "two-ray" => PathLoss::TwoRayGround,
                    other => return Err(SimError::invalid(key, format!("unknown path loss `{other}`"))),
                }
            }
            "channel.fading" => {
                self.channel.fading = match v {
                    "none" => Fading::None,
                    "rayleigh" => Fading::Rayleigh,
                    "rice" => Fading::Rice {
                        k: match self.channel.fading {
                            Fading::Rice { k } => k,
                            _ => 1.0,
                        },
                    },
                    other => return Err(SimError::invalid(key, format!("unknown fading `{other}`"))),
                }
            }
            "channel.rice_k" => {
                self.channel = ChannelModel {
                    path_loss: self.channel.path_loss,
                    fading: Fading::Rice { k: num(key, v)? },
                }
            }

            "pulse.chip_duration" => {
                self.pulse = PulseParams::new(secs(key, v)?, self.pulse.chips_per_frame(), self.pulse.pulses_per_symbol())?
            }
            "pulse.chips_per_frame" => {
                self.pulse = PulseParams::new(self.pulse.chip(), int(key, v)?, self.pulse.pulses_per_symbol())?
            }
            "pulse.pulses_per_symbol" => {
                self.pulse = PulseParams::new(self.pulse.chip(), self.pulse.chips_per_frame(), int(key, v)?)?
            }
            "pulse.frame_duration" => {
                let tf = secs(key, v)?;
                let derived = self.pulse.frame();
                if tf.ps().abs_diff(derived.ps()) > 1 {
                    return Err(SimError::invalid(
                        key,
                        format!("{tf} is inconsistent with N_h x T_c = {derived}"),
                    ));
                }
            }
            "pulse.ths_length" => self.ths_length = int(key, v)?,
            "phy.ber_curve" => {
                if v == "analytic" {
                    self.ber_curve = BerCurve::Analytic;
                    self.ber_curve_path = None;
                } else {
                    let path = match base_dir {
                        Some(d) if Path::new(v).is_relative() => d.join(v),
                        _ => Path::new(v).to_path_buf(),
                    };
                    self.ber_curve = BerCurve::load(&path)?;
                    self.ber_curve_path = Some(v.to_string());
                }
            }

            "mac.variant" => self.mac.kind = MacKind::parse(v)?,
            "mac.max_retx" => self.mac.max_retx = int(key, v)?,
            "mac.backoff_window" => self.mac.backoff_window = int(key, v)?,
            "mac.ack_bits" => self.mac.ack_bits = int(key, v)?,
            "mac.queue_limit" => self.mac.queue_limit = int(key, v)?,
            "mac.slot_duration" => self.mac.slot = Some(secs(key, v)?),
            "mac.ack_timeout" => self.mac.ack_timeout = Some(secs(key, v)?),
            "mac.turnaround" => self.mac.turnaround = Some(secs(key, v)?),
            "mac.csma_min_be" => self.mac.csma.min_be = int(key, v)?,
            "mac.csma_max_be" => self.mac.csma.max_be = int(key, v)?,
            "mac.csma_max_backoffs" => self.mac.csma.max_backoffs = int(key, v)?,
            "mac.csma_unit_backoff" => self.mac.csma.unit_backoff = secs(key, v)?,
            "mac.csma_cca_duration" => self.mac.csma.cca_duration = secs(key, v)?,

            "routing.mode" => {
                self.routing = match v {
                    "static" => RoutingMode::Static,
                    "aodv" => RoutingMode::Aodv,
                    other => return Err(SimError::invalid(key, format!("unknown routing mode `{other}`"))),
                }
            }
            "routing.route_lifetime" => self.aodv.route_lifetime = secs(key, v)?,
            "routing.rreq_retries" => self.aodv.rreq_retries = int(key, v)?,
            "routing.net_traversal" => self.aodv.net_traversal = secs(key, v)?,
            "routing.buffer_cap" => self.aodv.buffer_cap = int(key, v)?,
            "routing.rebroadcast_jitter" => self.aodv.rebroadcast_jitter = secs(key, v)?,

            "sensing.sampling_rate" => self.sensing.sampling_rate = num(key, v)?,
            "sensing.sensitivity_threshold" => self.sensing.sensitivity_threshold_dbm = num(key, v)?,
            "sensing.detection_threshold" => self.sensing.detection_threshold_dbm = num(key, v)?,
            "sensing.reliability" => self.sensing.reliability = num(key, v)?,
            "sensing.mid_band_probability" => self.sensing.mid_band_probability = num(key, v)?,
            "sensing.tx_power" => self.sensing.sensing_tx_power_dbm = num(key, v)?,
            "sensing.rice_k" => {
                self.sensing.rice_k = if v == "inf" { f64::INFINITY } else { num(key, v)? }
            }
            "sensing.frequency" => self.sensing.frequency_hz = num(key, v)?,
            "sensing.emitter_height" => self.sensing.emitter_height_m = num(key, v)?,
            "sensing.sensor_height" => self.sensing.sensor_height_m = num(key, v)?,
            "sensing.holdoff" => self.sensing.holdoff = secs(key, v)?,
            "sensing.auth_timeout" => self.sensing.auth_timeout = secs(key, v)?,

            "traffic.load" => self.load_pps = num(key, v)?,
            "traffic.cbr_bits" => self.cbr_bits = int(key, v)?,
            "traffic.report_bits" => self.report_bits = int(key, v)?,
            "traffic.control_bits" => self.control_bits = int(key, v)?,

            other => return Err(SimError::invalid(other, "unknown key")),
        }
        Ok(false)
    }
}

/// Parses and validates a scenario. Defaults start from an empty UWB
/// scenario; `radio.family` switches the radio and MAC defaults.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario> {
    let mut s = Scenario::empty("scenario", RadioFamily::Uwb);
    let mut default_z: Vec<usize> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = if let Some(rest) = line.strip_prefix("route ") {
            ("route", rest.trim_start().trim_start_matches('='))
        } else {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| syntax(line_no, "expected `section.key = value`"))?;
            (k.trim(), v.trim())
        };
        if key.is_empty() || (key != "route" && !key.contains('.')) {
            return Err(syntax(line_no, format!("malformed key `{key}`")));
        }
        let took_default = s.apply_inner(key, value, base_dir).map_err(|e| match e {
            SimError::InvalidParam { field, reason } => syntax(line_no, format!("{field}: {reason}")),
            other => other,
        })?;
        if let Some(id) = key.strip_prefix("node.").and_then(|i| i.parse::<usize>().ok()) {
            default_z.retain(|&n| n != id);
            if took_default {
                default_z.push(id);
            }
        }
    }
    for n in &mut s.nodes {
        if default_z.contains(&n.id) {
            n.position.z = s.radio.antenna_height_m;
        }
    }
    s.nodes.sort_by_key(|n| n.id);
    s.validate()?;
    Ok(s)
}

fn t(x: SimTime) -> String {
    format!("{}", x.as_secs())
}

/// Serializes a scenario so that [`parse_scenario`] yields an equal value.
pub fn to_text(s: &Scenario) -> String {
    let mut o = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(o, "{k} = {v}");
    };
    kv("scenario.name", s.name.clone());
    kv("scenario.area", format!("{} {}", s.area.0, s.area.1));
    kv("scenario.duration", t(s.duration));
    kv("scenario.drain", t(s.drain));
    kv("scenario.seeds", s.seeds.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));

    let r = &s.radio;
    kv("radio.family", r.family.as_str().to_string());
    kv("radio.bandwidth", r.bandwidth_hz.to_string());
    kv("radio.frequency", r.carrier_hz.to_string());
    kv("radio.throughput", r.throughput_bps.to_string());
    kv("radio.antenna_height", r.antenna_height_m.to_string());
    kv("radio.antenna_gain", r.antenna_gain_db.to_string());
    kv("radio.noise_figure", r.noise_figure_db.to_string());
    kv("radio.temperature", r.temperature_k.to_string());
    kv("radio.sensitivity", r.sensitivity_dbm.to_string());
    kv("radio.rx_threshold", r.rx_threshold_dbm.to_string());
    kv("radio.tx_power", r.tx_power_dbm.to_string());

    kv(
        "channel.path_loss",
        match s.channel.path_loss {
            PathLoss::FreeSpace => "free-space",
            PathLoss::TwoRayGround => "two-ray",
        }
        .to_string(),
    );
    match s.channel.fading {
        Fading::None => kv("channel.fading", "none".into()),
        Fading::Rayleigh => kv("channel.fading", "rayleigh".into()),
        Fading::Rice { k } => kv("channel.rice_k", k.to_string()),
    }

    kv("pulse.chip_duration", t(s.pulse.chip()));
    kv("pulse.chips_per_frame", s.pulse.chips_per_frame().to_string());
    kv("pulse.pulses_per_symbol", s.pulse.pulses_per_symbol().to_string());
    kv("pulse.ths_length", s.ths_length.to_string());
    kv("phy.ber_curve", s.ber_curve_path.clone().unwrap_or_else(|| "analytic".into()));

    let m = &s.mac;
    kv("mac.variant", m.kind.as_str().to_string());
    kv("mac.max_retx", m.max_retx.to_string());
    kv("mac.backoff_window", m.backoff_window.to_string());
    kv("mac.ack_bits", m.ack_bits.to_string());
    kv("mac.queue_limit", m.queue_limit.to_string());
    if let Some(x) = m.slot {
        kv("mac.slot_duration", t(x));
    }
    if let Some(x) = m.ack_timeout {
        kv("mac.ack_timeout", t(x));
    }
    if let Some(x) = m.turnaround {
        kv("mac.turnaround", t(x));
    }
    kv("mac.csma_min_be", m.csma.min_be.to_string());
    kv("mac.csma_max_be", m.csma.max_be.to_string());
    kv("mac.csma_max_backoffs", m.csma.max_backoffs.to_string());
    kv("mac.csma_unit_backoff", t(m.csma.unit_backoff));
    kv("mac.csma_cca_duration", t(m.csma.cca_duration));

    kv("routing.mode", s.routing.as_str().to_string());
    kv("routing.route_lifetime", t(s.aodv.route_lifetime));
    kv("routing.rreq_retries", s.aodv.rreq_retries.to_string());
    kv("routing.net_traversal", t(s.aodv.net_traversal));
    kv("routing.buffer_cap", s.aodv.buffer_cap.to_string());
    kv("routing.rebroadcast_jitter", t(s.aodv.rebroadcast_jitter));

    let p = &s.sensing;
    kv("sensing.sampling_rate", p.sampling_rate.to_string());
    kv("sensing.sensitivity_threshold", p.sensitivity_threshold_dbm.to_string());
    kv("sensing.detection_threshold", p.detection_threshold_dbm.to_string());
    kv("sensing.reliability", p.reliability.to_string());
    kv("sensing.mid_band_probability", p.mid_band_probability.to_string());
    kv("sensing.tx_power", p.sensing_tx_power_dbm.to_string());
    kv("sensing.rice_k", p.rice_k.to_string());
    kv("sensing.frequency", p.frequency_hz.to_string());
    kv("sensing.emitter_height", p.emitter_height_m.to_string());
    kv("sensing.sensor_height", p.sensor_height_m.to_string());
    kv("sensing.holdoff", t(p.holdoff));
    kv("sensing.auth_timeout", t(p.auth_timeout));

    kv("traffic.load", s.load_pps.to_string());
    kv("traffic.cbr_bits", s.cbr_bits.to_string());
    kv("traffic.report_bits", s.report_bits.to_string());
    kv("traffic.control_bits", s.control_bits.to_string());

    for n in &s.nodes {
        let mut line = format!(
            "{} {} {} {}",
            n.role.as_str(),
            n.position.x,
            n.position.y,
            n.position.z
        );
        if let Mobility::Waypoints { speed, points } = &n.mobility {
            let _ = write!(line, " waypoint {speed}");
            for (x, y) in points {
                let _ = write!(line, " {x},{y}");
            }
        }
        kv(&format!("node.{}", n.id), line);
    }
    for (i, f) in s.flows.iter().enumerate() {
        let mut line = format!("{} {}", f.source, f.destination);
        // positional: rate, start, stop
        let rate = f.rate_pps.or((f.start.is_some() || f.stop.is_some()).then_some(s.load_pps));
        if let Some(r) = rate {
            let _ = write!(line, " {r}");
        }
        let start = f.start.or(f.stop.map(|_| SimTime::ZERO));
        if let Some(x) = start {
            let _ = write!(line, " {}", t(x));
        }
        if let Some(x) = f.stop {
            let _ = write!(line, " {}", t(x));
        }
        kv(&format!("flow.{i}"), line);
    }
    for &(n, d, h) in &s.routes {
        let _ = writeln!(o, "route {n} {d} {h}");
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{scenario1, scenario2};

    #[test]
    fn presets_round_trip() {
        for s in [scenario1(), scenario2()] {
            let text = to_text(&s);
            let back = parse_scenario(&text, None).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn unknown_key_has_line_number() {
        let err = parse_scenario("scenario.name = x\nmac.bogus = 3\n", None).unwrap_err();
        assert!(matches!(err, SimError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn inconsistent_frame_rejected() {
        let err = parse_scenario("pulse.frame_duration = 2e-6\n", None).unwrap_err();
        assert!(matches!(err, SimError::Syntax { line: 1, .. }), "{err}");
        parse_scenario("pulse.frame_duration = 1e-6\n", None).unwrap();
    }

    #[test]
    fn throughput_must_match_pulse_geometry() {
        let err = parse_scenario("pulse.chips_per_frame = 50\n", None).unwrap_err();
        assert!(matches!(err, SimError::InvalidParam { ref field, .. } if field == "radio.throughput"), "{err}");
        parse_scenario("pulse.chips_per_frame = 50\nradio.throughput = 2e6\n", None).unwrap();
    }

    #[test]
    fn node_defaults_and_mobility() {
        let s = parse_scenario(
            "radio.family = oqpsk\nnode.1 = sensor 3 4\nnode.0 = base 0 0 2 static\nnode.2 = intruder-authorized 1 1 waypoint 2 1,1 5,1\n",
            None,
        )
        .unwrap();
        assert_eq!(s.nodes[1].position.z, s.radio.antenna_height_m);
        assert_eq!(s.nodes[0].position.z, 2.0);
        assert!(matches!(&s.nodes[2].mobility, Mobility::Waypoints { speed, points } if *speed == 2.0 && points.len() == 2));
        assert_eq!(s.mac.kind, MacKind::CsmaCa);
    }

    #[test]
    fn seeds_and_routes() {
        let s = parse_scenario(
            "scenario.seeds = 3..5\nnode.0 = base 0 0\nnode.1 = router 1 0\nroute 1 0 0\nroute = 1 0 0\n",
            None,
        )
        .unwrap();
        assert_eq!(s.seeds, vec![3, 4, 5]);
        assert_eq!(s.routes, vec![(1, 0, 0)]);
    }

    #[test]
    fn bad_values_name_the_field() {
        let err = parse_scenario("mac.max_retx = 9\n", None).unwrap_err();
        assert!(matches!(err, SimError::InvalidParam { ref field, .. } if field == "mac.max_retx"), "{err}");
        assert!(parse_scenario("radio.tx_power = abc\n", None).is_err());
        assert!(parse_scenario("just text\n", None).is_err());
    }
}
