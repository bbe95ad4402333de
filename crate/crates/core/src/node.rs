//! Node registry types: identity, placement, role and mobility.

use std::fmt;
use std::str::FromStr;

use crate::error::SimError;
use crate::sim::SimTime;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    /// Antenna height above ground.
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    /// Horizontal (ground) distance; antenna heights enter the two-ray model separately.
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Sensor,
    Router,
    BaseStation,
    IntruderAuthorized,
    IntruderUnauthorized,
}

impl Role {
    pub fn is_intruder(self) -> bool {
        matches!(self, Role::IntruderAuthorized | Role::IntruderUnauthorized)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Sensor => "sensor",
            Role::Router => "router",
            Role::BaseStation => "base",
            Role::IntruderAuthorized => "intruder-authorized",
            Role::IntruderUnauthorized => "intruder-unauthorized",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "sensor" => Role::Sensor,
            "router" => Role::Router,
            "base" | "base-station" => Role::BaseStation,
            "intruder-authorized" => Role::IntruderAuthorized,
            "intruder-unauthorized" => Role::IntruderUnauthorized,
            other => return Err(SimError::invalid("role", format!("unknown role `{other}`"))),
        })
    }
}

/// Static placement or a looping piecewise-linear waypoint path.
#[derive(Clone, Debug, PartialEq)]
pub enum Mobility {
    Static,
    Waypoints { speed: f64, points: Vec<(f64, f64)> },
}

impl Mobility {
    pub fn validate(&self) -> Result<(), SimError> {
        if let Mobility::Waypoints { speed, points } = self {
            if !(speed.is_finite() && *speed >= 0.0) {
                return Err(SimError::invalid("mobility.speed", "must be finite and >= 0"));
            }
            if points.is_empty() {
                return Err(SimError::invalid("mobility.points", "waypoint path needs at least one point"));
            }
            if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(SimError::invalid("mobility.points", "coordinates must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NodeState {
    pub id: NodeId,
    pub role: Role,
    /// Position at t = 0 (the first waypoint for mobile nodes).
    pub home: Position,
    pub mobility: Mobility,
}

impl NodeState {
    pub fn position_at(&self, t: SimTime) -> Position {
        match &self.mobility {
            Mobility::Static => self.home,
            Mobility::Waypoints { speed, points } => {
                let (x, y) = waypoint_position(points, *speed, t.as_secs());
                Position::new(x, y, self.home.z)
            }
        }
    }

    pub fn is_mobile(&self) -> bool {
        matches!(&self.mobility, Mobility::Waypoints { speed, points } if *speed > 0.0 && points.len() > 1)
    }
}

/// Position along a closed loop through `points` after travelling for `t` seconds.
fn waypoint_position(points: &[(f64, f64)], speed: f64, t: f64) -> (f64, f64) {
    if points.len() == 1 || speed == 0.0 {
        return points[0];
    }
    let n = points.len();
    let seg_len = |i: usize| {
        let (a, b) = (points[i], points[(i + 1) % n]);
        (b.0 - a.0).hypot(b.1 - a.1)
    };
    let loop_len: f64 = (0..n).map(seg_len).sum();
    if loop_len == 0.0 {
        return points[0];
    }
    let mut s = (speed * t) % loop_len;
    for i in 0..n {
        let len = seg_len(i);
        if s <= len && len > 0.0 {
            let (a, b) = (points[i], points[(i + 1) % n]);
            let f = s / len;
            return (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
        }
        s -= len;
    }
    points[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waypoint_loop() {
        let node = NodeState {
            id: 0,
            role: Role::IntruderAuthorized,
            home: Position::new(0.0, 0.0, 0.45),
            mobility: Mobility::Waypoints {
                speed: 1.0,
                points: vec![(0.0, 0.0), (10.0, 0.0)],
            },
        };
        let p = node.position_at(SimTime::from_secs(5.0));
        assert!((p.x - 5.0).abs() < 1e-9 && p.y.abs() < 1e-9);
        // back leg
        let p = node.position_at(SimTime::from_secs(15.0));
        assert!((p.x - 5.0).abs() < 1e-9);
        // full loop
        let p = node.position_at(SimTime::from_secs(20.0));
        assert!(p.x.abs() < 1e-9);
        assert_eq!(p.z, 0.45);
    }

    #[test]
    fn role_parse_round_trip() {
        for r in [
            Role::Sensor,
            Role::Router,
            Role::BaseStation,
            Role::IntruderAuthorized,
            Role::IntruderUnauthorized,
        ] {
            assert_eq!(r.as_str().parse::<Role>().unwrap(), r);
        }
        assert!("drone".parse::<Role>().is_err());
    }

    #[test]
    fn negative_speed_rejected() {
        let m = Mobility::Waypoints {
            speed: -1.0,
            points: vec![(0.0, 0.0)],
        };
        assert!(m.validate().is_err());
    }
}
