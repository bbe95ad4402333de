use proptest::prelude::*;
use uwbsim::channel::{ChannelModel, Fading, PathLoss, RadioFamily};
use uwbsim::node::{Mobility, Position, Role};
use uwbsim::scenario::*;
use uwbsim::{SimError, SimTime};

fn round_trip(s: &Scenario) -> Scenario {
    parse_scenario(&to_text(s), None).unwrap_or_else(|e| panic!("{e}\n{}", to_text(s)))
}

#[test]
fn presets_survive_text_form() {
    for name in PRESETS {
        let s = preset(name).unwrap();
        assert_eq!(round_trip(&s), s);
    }
}

#[test]
fn file_with_comments_and_defaults() {
    let text = "\
# two sensors and a base
scenario.name = tiny
scenario.area = 50x50
scenario.duration = 2.5   # seconds
mac.variant = slotted
routing.mode = aodv
node.0 = base 25 25
node.1 = sensor 10 25
node.2 = sensor 40 25 1.0 waypoint 2 40,25 40,40
flow.0 = 1 2 5 0.5 2
";
    let s = parse_scenario(text, None).unwrap();
    assert_eq!(s.name, "tiny");
    assert_eq!(s.duration, SimTime::from_ms(2500));
    assert_eq!(s.mac.kind, MacKind::Slotted);
    assert_eq!(s.nodes[1].position, Position::new(10.0, 25.0, s.radio.antenna_height_m));
    assert!(matches!(s.nodes[2].mobility, Mobility::Waypoints { speed, .. } if speed == 2.0));
    assert_eq!(s.flows[0].rate_pps, Some(5.0));
    assert_eq!(s.flows[0].start, Some(SimTime::from_ms(500)));
    assert_eq!(round_trip(&s), s);
}

#[test]
fn errors_name_line_and_field() {
    let err = parse_scenario("scenario.name = x\n\nmac.max_retx = seven\n", None).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 3") && msg.contains("mac.max_retx"), "{msg}");
    let err = parse_scenario("node.0 = base 1 1\nflow.0 = 0 5\n", None).unwrap_err();
    assert!(matches!(err, SimError::InvalidParam { .. }), "{err}");
    assert!(parse_scenario("mac.max_retx = 7\n", None).is_err());
    assert!(parse_scenario("traffic.load = 120\nnode.0 = base 1 1\nnode.1 = sensor 2 2\nflow.0 = 1 0\n", None).is_err());
}

fn tweaks() -> impl Strategy<Value = Scenario> {
    (
        (1u32..3, 0u32..=6, 1u32..32, 0.1f64..80.0),
        (prop::bool::ANY, 0.0f64..20.0, 0u8..3),
        (3_000_000_000_000u64..500_000_000_000_000, 0u64..1_000_000_000_000),
        prop::collection::vec((0usize..4, 0.0f64..200.0, 0.0f64..200.0, 0.01f64..3.0), 1..8),
        prop::collection::vec((0.1f64..80.0, 0u64..1_000_000_000_000), 0..4),
        prop::collection::vec((0.1f64..5.0, prop::collection::vec((0.0f64..200.0, 0.0f64..200.0), 1..4)), 0..3),
    )
        .prop_map(|(mac, chan, times, nodes, flows, walkers)| {
            let (kind, retx, window, load) = mac;
            let mut s = Scenario::empty("prop", RadioFamily::Uwb);
            s.area = (200.0, 200.0);
            s.mac.kind = if kind == 1 { MacKind::Unslotted } else { MacKind::Slotted };
            s.mac.max_retx = retx;
            s.mac.backoff_window = window;
            s.load_pps = load;
            s.channel = ChannelModel {
                path_loss: if chan.0 { PathLoss::TwoRayGround } else { PathLoss::FreeSpace },
                fading: match chan.2 {
                    0 => Fading::None,
                    1 => Fading::Rayleigh,
                    _ => Fading::Rice { k: chan.1 },
                },
            };
            s.duration = SimTime::from_ps(times.0);
            s.drain = SimTime::from_ps(times.1);
            s.routing = RoutingMode::Aodv;
            let roles = [Role::BaseStation, Role::Sensor, Role::Router, Role::Sensor];
            for (i, (r, x, y, z)) in nodes.into_iter().enumerate() {
                let role = if i == 0 { Role::BaseStation } else if r == 0 { Role::Sensor } else { roles[r] };
                s.nodes.push(NodeSpec { id: i, role, position: Position::new(x, y, z), mobility: Mobility::Static });
            }
            for (speed, points) in walkers {
                let id = s.nodes.len();
                let (x, y) = points[0];
                s.nodes.push(NodeSpec {
                    id,
                    role: Role::IntruderUnauthorized,
                    position: Position::new(x, y, 0.45),
                    mobility: Mobility::Waypoints { speed, points },
                });
            }
            if s.nodes.iter().filter(|n| !n.role.is_intruder()).count() >= 2 {
                for (rate, start) in flows {
                    s.flows.push(FlowSpec {
                        source: 1,
                        destination: 0,
                        rate_pps: Some(rate),
                        start: Some(SimTime::from_ps(start)),
                        stop: None,
                    });
                }
            }
            s
        })
}

proptest! {
    #[test]
    fn text_form_round_trips(s in tweaks()) {
        let back = round_trip(&s);
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(to_text(&back), to_text(&s));
    }
}
