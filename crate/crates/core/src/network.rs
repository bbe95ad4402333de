//! The network engine: wires radios, MACs, routers, sensing and the
//! applications of every node to one event scheduler.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::apps::{AuthTracker, CbrFlow, CbrSchedule, Dedup};
use crate::channel::{dbm_to_w, fading_gain, mean_received_dbm, noise_power, propagation_delay, RadioFamily};
use crate::error::Result;
use crate::mac::{DropReason, MacAction, MacState, MacStats, MacTimer};
use crate::metrics::{Metrics, Record};
use crate::node::{NodeId, NodeState, Role};
use crate::packet::{BeaconId, Frame, FrameBody, Packet, Payload, BROADCAST};
use crate::phy::oqpsk::{decide_packet_nb, NarrowbandReception};
use crate::phy::uwb::{decide_packet, generate_ths, ActiveTransmission, InterferenceMatrix, TimeHoppingSequence};
use crate::phy::{Arrival, CompletedReception, PacketDecision, Receiver};
use crate::rng::{mix_key, Purpose, RngStream};
use crate::routing::{Aodv, RouteAction, RouteDropReason, Router, StaticTable};
use crate::scenario::{RoutingMode, Scenario};
use crate::sensing::{in_range, sense_decision, sense_level, BeaconSchedule, HoldOff, SenseOutcome, SensingEvent};
use crate::sim::{Scheduler, SimTime};

#[derive(Clone, Debug)]
enum Ev {
    TxEnd { tx: u64 },
    RxStart(Arrival),
    RxEnd { tx: u64 },
    AckSend { to: NodeId, seq: u32 },
    Mac { timer: MacTimer, token: u64 },
    Route { dest: NodeId, token: u64 },
    Control { dst: NodeId, payload: Payload },
    CbrGen { flow: usize, k: u64 },
    Beacon { index: u64 },
}

struct NodeRt {
    state: NodeState,
    rx: Receiver,
    mac: MacState,
    router: Option<Router>,
    ths: Arc<TimeHoppingSequence>,
    /// Clock offset of this transmitter, part of every receiver's tau.
    offset: SimTime,
    next_uid: u64,
    dedup: Dedup,
    auth: AuthTracker,
}

struct InFlight {
    frame: Frame,
    refs: usize,
}

fn drop_cause(r: DropReason) -> &'static str {
    match r {
        DropReason::QueueFull => "queue-full",
        DropReason::RetryLimit => "retry-limit",
        DropReason::ChannelAccess => "channel-access",
    }
}

fn route_drop_cause(r: RouteDropReason) -> &'static str {
    match r {
        RouteDropReason::NoRoute => "no-route",
        RouteDropReason::BufferOverflow => "buffer-overflow",
        RouteDropReason::DiscoveryFailed => "discovery-failed",
        RouteDropReason::HopLimit => "hop-limit",
    }
}

/// Output of one completed run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub records: Vec<Record>,
    pub mac_stats: Vec<MacStats>,
    pub events: u64,
}

pub struct Network {
    scenario: Scenario,
    seed: u64,
    sched: Scheduler<Ev>,
    nodes: Vec<NodeRt>,
    /// Mean received power between static nodes, watts.
    static_power: Vec<Vec<Option<f64>>>,
    noise_w: f64,
    bit_time: SimTime,
    turnaround: SimTime,
    in_flight: HashMap<u64, InFlight>,
    next_tx: u64,
    base: Option<NodeId>,
    flows: Vec<CbrFlow>,
    schedules: Vec<CbrSchedule>,
    beacons: HashMap<NodeId, BeaconSchedule>,
    beacon_stop: SimTime,
    holdoff: HoldOff,
    records: Vec<Record>,
    trace: Option<Vec<String>>,
    events: u64,
}

impl Network {
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let s = scenario.clone();
        let radio = &s.radio;
        let mac_cfg = s.mac_config();
        let bit_time = s.bit_time();
        let sens_w = dbm_to_w(radio.sensitivity_dbm);
        let thr_w = dbm_to_w(radio.rx_threshold_dbm);
        let states = s.node_states();

        let mut nodes = Vec::with_capacity(states.len());
        for st in states {
            let id = st.id;
            let router = if st.role.is_intruder() {
                None
            } else {
                Some(match s.routing {
                    RoutingMode::Static => {
                        let mut table = StaticTable::default();
                        for &(n, d, h) in &s.routes {
                            if n == id {
                                table.insert(d, h);
                            }
                        }
                        Router::Static { me: id, table }
                    }
                    RoutingMode::Aodv => Router::Aodv(Aodv::new(id, seed, s.aodv)),
                })
            };
            let offset = match s.family() {
                RadioFamily::Uwb => {
                    SimTime::from_ps(RngStream::new(seed, id as u64, Purpose::ClockOffset).below(s.pulse.frame().ps()))
                }
                RadioFamily::Oqpsk => SimTime::ZERO,
            };
            nodes.push(NodeRt {
                rx: Receiver::new(sens_w, thr_w),
                mac: MacState::new(id, seed, mac_cfg, bit_time),
                router,
                ths: Arc::new(generate_ths(seed, id, s.ths_length, s.pulse.chips_per_frame())),
                offset,
                next_uid: 0,
                dedup: Dedup::default(),
                auth: AuthTracker::default(),
                state: st,
            });
        }

        let n = nodes.len();
        let mut static_power = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && !nodes[i].state.is_mobile() && !nodes[j].state.is_mobile() {
                    let d = nodes[i].state.home.distance(&nodes[j].state.home);
                    static_power[i][j] = Some(dbm_to_w(mean_received_dbm(radio, radio, d, &s.channel)));
                }
            }
        }

        let flows = s.cbr_flows();
        let mut sched = Scheduler::new();
        let mut schedules = Vec::with_capacity(flows.len());
        for (i, f) in flows.iter().enumerate() {
            let mut st = RngStream::keyed(seed, f.source as u64, Purpose::AppTraffic, i as u64);
            let sch = CbrSchedule::new(f, &mut st);
            if let Some(t) = sch.emission(0) {
                sched.schedule(t, f.source, Ev::CbrGen { flow: i, k: 0 })?;
            }
            schedules.push(sch);
        }

        let beacon_stop = s.duration.saturating_sub(s.drain);
        let mut beacons = HashMap::new();
        if s.sensing_enabled() {
            let period = s.sensing.period();
            for node in nodes.iter().filter(|n| n.state.role.is_intruder()) {
                let id = node.state.id;
                let mut st = RngStream::keyed(seed, id as u64, Purpose::Sensing, u64::MAX);
                let b = BeaconSchedule::new(period, &mut st);
                if b.count_before(beacon_stop) > 0 {
                    sched.schedule(b.emission(0), id, Ev::Beacon { index: 0 })?;
                }
                beacons.insert(id, b);
            }
        }

        Ok(Network {
            noise_w: noise_power(&s.radio),
            turnaround: s.turnaround(),
            base: s.base_station(),
            scenario: s,
            seed,
            sched,
            nodes,
            static_power,
            bit_time,
            in_flight: HashMap::new(),
            next_tx: 0,
            flows,
            schedules,
            beacons,
            beacon_stop,
            holdoff: HoldOff::default(),
            records: Vec::new(),
            trace: None,
            events: 0,
        })
    }

    /// Keeps a line per processed event and per transmission.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> &[String] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn mac_stats(&self) -> Vec<MacStats> {
        self.nodes.iter().map(|n| n.mac.stats()).collect()
    }

    pub fn router(&self, node: NodeId) -> Option<&Router> {
        self.nodes.get(node).and_then(|n| n.router.as_ref())
    }

    fn log(&mut self, node: NodeId, what: impl FnOnce() -> String) {
        if let Some(t) = &mut self.trace {
            let mut line = String::new();
            let _ = write!(line, "{} n{} {}", self.sched.now(), node, what());
            t.push(line);
        }
    }

    fn at(&mut self, t: SimTime, node: NodeId, ev: Ev) -> Result<()> {
        self.sched.schedule(t, node, ev).map(|_| ())
    }

    /// Processes every event up to and including `t_end`, then moves the
    /// clock to `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<Metrics> {
        while let Some(ev) = self.sched.pop_until(t_end) {
            self.events += 1;
            self.dispatch(ev.target, ev.kind)?;
        }
        self.sched.advance_to(t_end);
        Ok(Metrics::from_records(&self.records))
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput {
            metrics: Metrics::from_records(&self.records),
            mac_stats: self.nodes.iter().map(|n| n.mac.stats()).collect(),
            records: self.records,
            events: self.events,
        }
    }

    fn dispatch(&mut self, node: NodeId, ev: Ev) -> Result<()> {
        let now = self.sched.now();
        match ev {
            Ev::TxEnd { tx } => {
                let frame = self.release(tx);
                self.nodes[node].rx.end_tx();
                if frame.as_ref().is_some_and(|f| !f.is_ack()) {
                    let acts = self.nodes[node].mac.on_tx_end(now);
                    self.mac_actions(node, acts)?;
                }
                self.radio_free(node, true)?;
            }
            Ev::RxStart(a) => {
                self.nodes[node].rx.on_arrival(a);
            }
            Ev::RxEnd { tx } => {
                let done = self.nodes[node].rx.on_arrival_end(tx);
                let frame = self.release(tx);
                if let (Some(c), Some(frame)) = (done, frame) {
                    if frame.dst == node || frame.is_broadcast() {
                        if self.decide(node, &c, frame.bits).is_delivered() {
                            self.log(node, || format!("rx {} from n{} seq {}", kind(&frame), frame.src, frame.seq));
                            self.on_frame(node, frame)?;
                        } else {
                            self.log(node, || format!("rx-error {} from n{}", kind(&frame), frame.src));
                        }
                    }
                }
                self.radio_free(node, false)?;
            }
            Ev::AckSend { to, seq } => {
                let ack = self.nodes[node].mac.ack_frame(to, seq);
                self.transmit(node, ack)?;
            }
            Ev::Mac { timer, token } => {
                let n = &mut self.nodes[node];
                let acts = n.mac.on_timer(now, timer, token, &n.rx);
                self.mac_actions(node, acts)?;
            }
            Ev::Route { dest, token } => {
                if let Some(r) = self.nodes[node].router.as_mut() {
                    let acts = r.on_timer(now, dest, token);
                    self.route_actions(node, acts)?;
                }
            }
            Ev::Control { dst, payload } => self.send_control(node, dst, payload)?,
            Ev::CbrGen { flow, k } => self.cbr_generate(flow, k)?,
            Ev::Beacon { index } => self.beacon(node, index)?,
        }
        Ok(())
    }

    fn release(&mut self, tx: u64) -> Option<Frame> {
        let e = self.in_flight.get_mut(&tx)?;
        e.refs -= 1;
        if e.refs == 0 {
            self.in_flight.remove(&tx).map(|e| e.frame)
        } else {
            Some(e.frame.clone())
        }
    }

    fn radio_free(&mut self, node: NodeId, own_tx: bool) -> Result<()> {
        let n = &mut self.nodes[node];
        if n.mac.is_deferred() && !n.rx.is_busy() {
            let acts = n.mac.on_radio_free(self.sched.now(), own_tx);
            self.mac_actions(node, acts)?;
        }
        Ok(())
    }

    fn power(&self, from: NodeId, to: NodeId, now: SimTime) -> (f64, f64) {
        let (a, b) = (&self.nodes[from].state, &self.nodes[to].state);
        let d = a.position_at(now).distance(&b.position_at(now));
        let mean = self.static_power[from][to].unwrap_or_else(|| {
            dbm_to_w(mean_received_dbm(&self.scenario.radio, &self.scenario.radio, d, &self.scenario.channel))
        });
        let fading = self.scenario.channel.fading;
        let gain = if self.scenario.channel.has_fading() {
            let key = mix_key(&[to as u64, now.ps()]);
            fading_gain(fading, &mut RngStream::keyed(self.seed, from as u64, Purpose::ChannelFading, key))
        } else {
            1.0
        };
        (mean * gain, d)
    }

    fn transmit(&mut self, node: NodeId, frame: Frame) -> Result<()> {
        let now = self.sched.now();
        let airtime = self.bit_time.mul(frame.bits as u64);
        let end = now + airtime;
        self.nodes[node].rx.start_tx(end);
        let tx = self.next_tx;
        self.next_tx += 1;
        self.log(node, || {
            let uid = frame.packet().map(|p| format!(" uid {:#x}", p.uid)).unwrap_or_default();
            format!("tx {} to {} seq {} bits {}{uid}", kind(&frame), dst_name(frame.dst), frame.seq, frame.bits)
        });
        let offset = self.nodes[node].offset;
        let mut refs = 1;
        for j in 0..self.nodes.len() {
            if j == node {
                continue;
            }
            let (p, d) = self.power(node, j, now);
            if p < self.nodes[j].rx.sensitivity_w() {
                continue;
            }
            let start = now + offset + propagation_delay(d);
            let a = Arrival {
                tx,
                source: node,
                start,
                end: start + airtime,
                power_w: p,
            };
            self.at(start, j, Ev::RxStart(a))?;
            self.at(a.end, j, Ev::RxEnd { tx })?;
            refs += 1;
        }
        self.in_flight.insert(tx, InFlight { frame, refs });
        self.at(end, node, Ev::TxEnd { tx })
    }

    fn decide(&self, node: NodeId, c: &CompletedReception, bits: u32) -> PacketDecision {
        let sig = &c.signal;
        let key = mix_key(&[sig.source as u64, sig.start.ps()]);
        let mut stream = RngStream::keyed(self.seed, node as u64, Purpose::BitErrors, key);
        let curve = &self.scenario.ber_curve;
        match self.scenario.family() {
            RadioFamily::Uwb => {
                let pulse = &self.scenario.pulse;
                let frame_ps = pulse.frame().ps();
                let active = |a: &Arrival| ActiveTransmission {
                    source: a.source,
                    ths: self.nodes[a.source].ths.clone(),
                    t_start: a.start,
                    tau: SimTime::ZERO,
                    power_w: a.power_w,
                    frames: (a.end - a.start).ps() / frame_ps,
                };
                let user = active(sig);
                let others: Vec<ActiveTransmission> = c.interferers.iter().map(active).collect();
                let matrix = InterferenceMatrix::build(&user, &others, pulse, 0..user.frames);
                let powers: Vec<f64> = std::iter::once(sig.power_w)
                    .chain(c.interferers.iter().map(|a| a.power_w))
                    .collect();
                let sinr = matrix.sinr_vector(&powers, self.noise_w);
                decide_packet(&sinr, pulse, bits, curve, &mut stream)
            }
            RadioFamily::Oqpsk => {
                let rx = NarrowbandReception::new(sig, &c.interferers, self.noise_w);
                decide_packet_nb(&rx, bits, self.bit_time, curve, &mut stream)
            }
        }
    }

    fn on_frame(&mut self, node: NodeId, frame: Frame) -> Result<()> {
        let now = self.sched.now();
        match frame.body {
            FrameBody::Ack { acked_seq } => {
                let acts = self.nodes[node].mac.on_ack(now, frame.src, acked_seq);
                self.mac_actions(node, acts)?;
            }
            FrameBody::Data(packet) => {
                if frame.dst == BROADCAST {
                    self.deliver_up(node, packet, frame.src)?;
                } else {
                    self.nodes[node].rx.reserve();
                    self.at(now + self.turnaround, node, Ev::AckSend { to: frame.src, seq: frame.seq })?;
                    if self.nodes[node].mac.accept_data(frame.src, frame.seq) {
                        self.deliver_up(node, packet, frame.src)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn new_packet(&mut self, node: NodeId, dest: NodeId, bits: u32, payload: Payload) -> Packet {
        let n = &mut self.nodes[node];
        let uid = ((node as u64) << 32) | n.next_uid;
        n.next_uid += 1;
        Packet {
            uid,
            origin: node,
            dest,
            created_at: self.sched.now(),
            bits,
            payload,
            hops: Vec::new(),
        }
    }

    /// One-hop packet straight to the MAC.
    fn send_one_hop(&mut self, node: NodeId, mut packet: Packet) -> Result<()> {
        let next_hop = packet.dest;
        packet.hops.push(node);
        let acts = self.nodes[node].mac.enqueue(self.sched.now(), next_hop, packet);
        self.mac_actions(node, acts)
    }

    fn send_control(&mut self, node: NodeId, dst: NodeId, payload: Payload) -> Result<()> {
        let bits = self.scenario.control_bits;
        let p = self.new_packet(node, dst, bits, payload);
        self.send_one_hop(node, p)
    }

    fn route(&mut self, node: NodeId, packet: Packet) -> Result<()> {
        let now = self.sched.now();
        let Some(r) = self.nodes[node].router.as_mut() else {
            return Ok(());
        };
        let acts = r.route_packet(now, packet);
        self.route_actions(node, acts)
    }

    fn deliver_up(&mut self, node: NodeId, packet: Packet, from: NodeId) -> Result<()> {
        let now = self.sched.now();
        let role = self.nodes[node].state.role;
        match packet.payload {
            Payload::Rreq(_) | Payload::Rrep(_) => {
                if let Some(r) = self.nodes[node].router.as_mut() {
                    let acts = r.on_control(now, &packet.payload, from);
                    self.route_actions(node, acts)?;
                }
            }
            Payload::AuthReq { req_id, sensor, intruder } => {
                if intruder == node && role == Role::IntruderAuthorized && self.nodes[node].dedup.first_time(packet.uid) {
                    self.records.push(Record::AuthRespSent { t: now, req_id, sensor, intruder });
                    let bits = self.scenario.report_bits;
                    let p = self.new_packet(node, sensor, bits, Payload::AuthResp { req_id, sensor, intruder });
                    self.send_one_hop(node, p)?;
                }
            }
            Payload::AuthResp { req_id, sensor, intruder } => {
                if sensor == node && self.nodes[node].auth.on_response(req_id, intruder, now) {
                    if let Some(base) = self.base {
                        self.records.push(Record::AuthNotifySent { t: now, req_id, sensor, intruder });
                        let bits = self.scenario.report_bits;
                        let p = self.new_packet(node, base, bits, Payload::AuthNotify { req_id, sensor, intruder });
                        self.route(node, p)?;
                    }
                }
            }
            _ => {
                if !role.is_intruder() {
                    self.route(node, packet)?;
                }
            }
        }
        Ok(())
    }

    fn app_receive(&mut self, node: NodeId, packet: Packet) {
        if !self.nodes[node].dedup.first_time(packet.uid) {
            return;
        }
        let t = self.sched.now();
        match packet.payload {
            Payload::Cbr { flow, .. } => self.records.push(Record::CbrReceived {
                t,
                flow,
                uid: packet.uid,
                bits: packet.bits,
                created_at: packet.created_at,
                hops: packet.hops,
            }),
            Payload::Detect { sensor, beacon, emitted_at } => self.records.push(Record::DetectReceived {
                t,
                sensor,
                beacon,
                emitted_at,
                hops: packet.hops,
            }),
            Payload::AuthNotify { req_id, sensor, intruder } => {
                self.records.push(Record::AuthNotifyReceived { t, req_id, sensor, intruder })
            }
            _ => {}
        }
    }

    fn mac_actions(&mut self, node: NodeId, acts: Vec<MacAction>) -> Result<()> {
        for a in acts {
            match a {
                MacAction::Transmit(frame) => self.transmit(node, frame)?,
                MacAction::SetTimer { at, timer, token } => self.at(at, node, Ev::Mac { timer, token })?,
                MacAction::Sent(_) => {}
                MacAction::Dropped { packet, reason, .. } => {
                    let cause = drop_cause(reason);
                    self.log(node, || format!("drop {} uid {:#x} {cause}", packet.payload.name(), packet.uid));
                    self.records.push(Record::Dropped { t: self.sched.now(), node, uid: packet.uid, cause });
                }
            }
        }
        Ok(())
    }

    fn route_actions(&mut self, node: NodeId, acts: Vec<RouteAction>) -> Result<()> {
        let now = self.sched.now();
        for a in acts {
            match a {
                RouteAction::Forward { next_hop, mut packet } => {
                    // a route that changed under a packet in flight may point back along its path
                    if packet.hops.contains(&node) || packet.hops.contains(&next_hop) {
                        self.log(node, || format!("drop {} uid {:#x} loop", packet.payload.name(), packet.uid));
                        self.records.push(Record::Dropped { t: now, node, uid: packet.uid, cause: "loop" });
                        continue;
                    }
                    packet.hops.push(node);
                    let acts = self.nodes[node].mac.enqueue(now, next_hop, packet);
                    self.mac_actions(node, acts)?;
                }
                RouteAction::Deliver(packet) => self.app_receive(node, packet),
                RouteAction::Control { dst, payload, delay } => {
                    if delay == SimTime::ZERO {
                        self.send_control(node, dst, payload)?;
                    } else {
                        self.at(now + delay, node, Ev::Control { dst, payload })?;
                    }
                }
                RouteAction::SetTimer { at, dest, token } => self.at(at, node, Ev::Route { dest, token })?,
                RouteAction::Drop { packet, reason } => {
                    let cause = route_drop_cause(reason);
                    self.log(node, || format!("drop {} uid {:#x} {cause}", packet.payload.name(), packet.uid));
                    self.records.push(Record::Dropped { t: now, node, uid: packet.uid, cause });
                }
            }
        }
        Ok(())
    }

    fn cbr_generate(&mut self, flow: usize, k: u64) -> Result<()> {
        let f = self.flows[flow];
        let p = self.new_packet(f.source, f.destination, f.payload_bits, Payload::Cbr { flow, seq: k });
        self.records.push(Record::CbrSent {
            t: self.sched.now(),
            flow,
            uid: p.uid,
            bits: p.bits,
        });
        self.route(f.source, p)?;
        if let Some(t) = self.schedules[flow].emission(k + 1) {
            self.at(t, f.source, Ev::CbrGen { flow, k: k + 1 })?;
        }
        Ok(())
    }

    fn beacon(&mut self, intruder: NodeId, index: u64) -> Result<()> {
        let now = self.sched.now();
        let sch = self.beacons[&intruder];
        if sch.count_before(self.beacon_stop) > index + 1 {
            self.at(sch.emission(index + 1), intruder, Ev::Beacon { index: index + 1 })?;
        }
        let params = self.scenario.sensing;
        let pos = self.nodes[intruder].state.position_at(now);
        let (w, h) = self.scenario.area;
        if pos.x < 0.0 || pos.y < 0.0 || pos.x > w || pos.y > h {
            return Ok(());
        }
        let beacon = BeaconId { intruder, index };
        let sensors: Vec<(NodeId, f64)> = self
            .nodes
            .iter()
            .filter(|n| n.state.role == Role::Sensor)
            .map(|n| (n.state.id, n.state.position_at(now).distance(&pos)))
            .filter(|&(_, d)| in_range(&params, d))
            .collect();
        self.records.push(Record::Beacon {
            t: now,
            beacon,
            sensors_in_range: sensors.len() as u32,
        });
        for (sensor, d) in sensors {
            let spos = self.nodes[sensor].state.position_at(now);
            // other intruders whose beacon in the same sampling window reaches this sensor
            let mut concurrent = 1;
            for (&other, sch) in &self.beacons {
                if other == intruder {
                    continue;
                }
                if let Some((_, t)) = sch.emission_near(now) {
                    if t < self.beacon_stop {
                        let opos = self.nodes[other].state.position_at(t);
                        if in_range(&params, opos.distance(&spos)) {
                            concurrent += 1;
                        }
                    }
                }
            }
            let key = mix_key(&[index, sensor as u64]);
            let mut stream = RngStream::keyed(self.seed, intruder as u64, Purpose::Sensing, key);
            let level = sense_level(&params, d, &mut stream);
            let outcome = sense_decision(level, &params, concurrent, &mut stream);
            self.records.push(Record::Sensed(SensingEvent {
                intruder,
                sensor,
                emitted_at: now,
                level_dbm: level,
                outcome,
            }));
            if outcome == SenseOutcome::Detected && self.holdoff.admit(sensor, intruder, now, params.holdoff) {
                self.on_detection(sensor, intruder, beacon)?;
            }
        }
        Ok(())
    }

    fn on_detection(&mut self, sensor: NodeId, intruder: NodeId, beacon: BeaconId) -> Result<()> {
        let now = self.sched.now();
        let bits = self.scenario.report_bits;
        if let Some(base) = self.base {
            self.records.push(Record::DetectSent { t: now, sensor, beacon });
            let p = self.new_packet(sensor, base, bits, Payload::Detect { sensor, beacon, emitted_at: now });
            self.route(sensor, p)?;
        }
        let req = self.new_packet(sensor, BROADCAST, bits, Payload::AuthReq { req_id: 0, sensor, intruder });
        let req_id = req.uid;
        let req = Packet {
            payload: Payload::AuthReq { req_id, sensor, intruder },
            ..req
        };
        self.records.push(Record::AuthReqSent { t: now, req_id, sensor, intruder });
        let deadline = now + self.scenario.sensing.auth_timeout;
        self.nodes[sensor].auth.start(req_id, intruder, deadline);
        self.send_one_hop(sensor, req)
    }
}

fn kind(f: &Frame) -> &'static str {
    match &f.body {
        FrameBody::Ack { .. } => "ack",
        FrameBody::Data(p) => p.payload.name(),
    }
}

fn dst_name(d: NodeId) -> String {
    if d == BROADCAST {
        "*".to_string()
    } else {
        format!("n{d}")
    }
}

/// Runs `scenario` with `seed` to its configured duration.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<RunOutput> {
    let mut net = Network::new(scenario, seed)?;
    net.run_until(scenario.duration)?;
    Ok(net.into_output())
}
