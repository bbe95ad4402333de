//! Built-in scenarios.
//!
//! `scenario1`: a base station with four routers on the axes at 15 m and
//! four CBR sources 5 m beyond them, routed statically source -> router ->
//! base. `scenario2`: a 200 m x 200 m protected field with 60 sensors on a
//! 25 m grid around a central base station, AODV routing, five CBR flows
//! between opposite sides of the field and four intruders (two authorized)
//! patrolling looping paths, one per quadrant.

use crate::channel::{ChannelModel, RadioFamily};
use crate::error::{Result, SimError};
use crate::node::{Mobility, Position, Role};
use crate::scenario::{FlowSpec, NodeSpec, RoutingMode, Scenario};
use crate::sim::SimTime;

pub const PRESETS: &[&str] = &["scenario1", "scenario2"];

pub fn preset(name: &str) -> Result<Scenario> {
    match name {
        "scenario1" => Ok(scenario1()),
        "scenario2" => Ok(scenario2()),
        other => Err(SimError::UnknownPreset(other.to_string())),
    }
}

fn node(id: usize, role: Role, x: f64, y: f64, z: f64) -> NodeSpec {
    NodeSpec {
        id,
        role,
        position: Position::new(x, y, z),
        mobility: Mobility::Static,
    }
}

pub fn scenario1() -> Scenario {
    let mut s = Scenario::empty("scenario1", RadioFamily::Uwb);
    s.area = (100.0, 100.0);
    s.duration = SimTime::from_secs(60.0);
    s.drain = SimTime::from_secs(1.0);
    s.seeds = (1..=10).collect();
    s.channel = ChannelModel::FREE_SPACE;
    s.routing = RoutingMode::Static;
    s.load_pps = 60.0;
    s.mac.max_retx = 4;
    let z = s.radio.antenna_height_m;
    let (cx, cy) = (50.0, 50.0);
    s.nodes.push(node(0, Role::BaseStation, cx, cy, z));
    let axes = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
    for (i, (dx, dy)) in axes.iter().enumerate() {
        s.nodes.push(node(1 + i, Role::Router, cx + 15.0 * dx, cy + 15.0 * dy, z));
    }
    for (i, (dx, dy)) in axes.iter().enumerate() {
        s.nodes.push(node(5 + i, Role::Sensor, cx + 20.0 * dx, cy + 20.0 * dy, z));
    }
    for i in 0..4 {
        let (router, source) = (1 + i, 5 + i);
        s.routes.push((source, 0, router));
        s.routes.push((router, 0, 0));
        s.flows.push(FlowSpec {
            source,
            destination: 0,
            rate_pps: None,
            start: None,
            stop: None,
        });
    }
    s
}

pub fn scenario2() -> Scenario {
    let mut s = Scenario::empty("scenario2", RadioFamily::Uwb);
    s.area = (200.0, 200.0);
    s.duration = SimTime::from_secs(100.0);
    s.drain = SimTime::from_secs(5.0);
    s.seeds = (1..=10).collect();
    s.channel = ChannelModel::FREE_SPACE;
    s.routing = RoutingMode::Aodv;
    s.aodv.route_lifetime = SimTime::from_secs(5.0);
    s.load_pps = 1.0;
    s.mac.max_retx = 4;
    let z = s.radio.antenna_height_m;
    s.nodes.push(node(0, Role::BaseStation, 100.0, 100.0, z));
    for row in 0..8 {
        for col in 0..8 {
            let corner = (row == 0 || row == 7) && (col == 0 || col == 7);
            if corner {
                continue;
            }
            let id = s.nodes.len();
            s.nodes.push(node(id, Role::Sensor, 12.5 + 25.0 * col as f64, 12.5 + 25.0 * row as f64, z));
        }
    }
    // peer-to-peer flows between opposite sides of the field
    let sensor_at = |s: &Scenario, x: f64, y: f64| {
        s.nodes
            .iter()
            .find(|n| n.position.x == x && n.position.y == y)
            .map(|n| n.id)
            .expect("grid sensor")
    };
    let pairs = [
        ((12.5, 87.5), (187.5, 112.5)),
        ((112.5, 12.5), (87.5, 187.5)),
        ((12.5, 37.5), (187.5, 162.5)),
        ((37.5, 12.5), (162.5, 187.5)),
        ((187.5, 37.5), (12.5, 162.5)),
    ];
    for ((sx, sy), (dx, dy)) in pairs {
        let (source, destination) = (sensor_at(&s, sx, sy), sensor_at(&s, dx, dy));
        s.flows.push(FlowSpec {
            source,
            destination,
            rate_pps: None,
            start: None,
            stop: None,
        });
    }
    let loops = [
        (Role::IntruderAuthorized, 25.0, 25.0),
        (Role::IntruderUnauthorized, 125.0, 25.0),
        (Role::IntruderAuthorized, 125.0, 125.0),
        (Role::IntruderUnauthorized, 25.0, 125.0),
    ];
    for (role, x0, y0) in loops {
        let id = s.nodes.len();
        let points = vec![(x0, y0), (x0 + 50.0, y0), (x0 + 50.0, y0 + 50.0), (x0, y0 + 50.0)];
        s.nodes.push(NodeSpec {
            id,
            role,
            position: Position::new(x0, y0, z),
            mobility: Mobility::Waypoints { speed: 1.0, points },
        });
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario1_layout() {
        let s = scenario1();
        s.validate().unwrap();
        assert_eq!(s.nodes.len(), 9);
        let base = s.nodes[0].position;
        for r in 1..=4 {
            assert!((s.nodes[r].position.distance(&base) - 15.0).abs() < 1e-9);
            assert!((s.nodes[r + 4].position.distance(&s.nodes[r].position) - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scenario2_layout() {
        let s = scenario2();
        s.validate().unwrap();
        assert_eq!(s.nodes.iter().filter(|n| n.role == Role::Sensor).count(), 60);
        assert_eq!(s.nodes.iter().filter(|n| n.role.is_intruder()).count(), 4);
        assert_eq!(s.base_station(), Some(0));
        assert!(s.sensing_enabled());
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("nope"), Err(SimError::UnknownPreset(_))));
    }
}
