use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::geometry::{Polyline, Vec3};
use crate::scenario::{AgentKind, AgentSpec, LaneKind, TrafficPlan, TrafficSpec};

const TRAFFIC_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: String,
    pub kind: AgentKind,
    pub lane: usize,
    /// Arc length travelled along the lane, in [0, lane length).
    pub s: f64,
    pub speed: f64,
    /// Ground contact point.
    pub position: Vec3,
    pub velocity: Vec3,
    /// Travel direction, radians from +x.
    pub heading: f64,
    /// Index of the lane segment the agent is on.
    pub waypoint: usize,
}

/// Moving traffic on the bridge decks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficState {
    pub agents: Vec<AgentState>,
    lanes: Vec<Polyline>,
}

struct Placement {
    s: f64,
    position: Vec3,
    direction: Vec3,
    segment: usize,
}

fn place(lane: &Polyline, s: f64) -> Placement {
    let len = lane.length();
    let s = if len > 0.0 { s.rem_euclid(len) } else { 0.0 };
    let (position, segment) = lane.point_at(s);
    Placement {
        s,
        position,
        direction: lane.direction(segment),
        segment,
    }
}

impl AgentState {
    fn moved_to(&mut self, p: Placement) {
        self.s = p.s;
        self.position = p.position;
        self.velocity = p.direction * self.speed;
        self.heading = p.direction.y.atan2(p.direction.x);
        self.waypoint = p.segment;
    }
}

impl TrafficState {
    pub fn new(spec: &TrafficSpec) -> Self {
        let lanes: Vec<Polyline> = spec.lanes.iter().map(|l| Polyline::new(l.points.clone())).collect();
        let agents = spec
            .agents
            .iter()
            .map(|a| {
                let mut state = AgentState {
                    id: a.id.clone(),
                    kind: a.kind,
                    lane: a.lane,
                    s: 0.0,
                    speed: a.speed,
                    position: Vec3::zeros(),
                    velocity: Vec3::zeros(),
                    heading: 0.0,
                    waypoint: 0,
                };
                state.moved_to(place(&lanes[a.lane], a.offset));
                state
            })
            .collect();
        Self { agents, lanes }
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

/// Move every agent `speed * dt` along its lane, wrapping at the lane end.
pub fn step_traffic(traffic: &mut TrafficState, dt: f64) {
    for a in &mut traffic.agents {
        let p = place(&traffic.lanes[a.lane], a.s + a.speed * dt);
        a.moved_to(p);
    }
}

/// Draw agents for a traffic plan. Vehicles go on road lanes, pedestrians
/// on sidewalks; lane, offset and speed are uniform draws.
pub fn generate_agents(
    traffic: &TrafficSpec,
    plan: &TrafficPlan,
    seed: u64,
) -> Result<Vec<AgentSpec>, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRAFFIC_STREAM);
    let mut out = Vec::with_capacity(plan.vehicles + plan.pedestrians);
    let groups = [
        (AgentKind::Vehicle, LaneKind::Road, plan.vehicles, plan.vehicle_speed, "vehicle"),
        (AgentKind::Human, LaneKind::Sidewalk, plan.pedestrians, plan.pedestrian_speed, "pedestrian"),
    ];
    for (kind, lane_kind, count, [lo, hi], prefix) in groups {
        if count == 0 {
            continue;
        }
        let lanes: Vec<usize> = (0..traffic.lanes.len())
            .filter(|&k| traffic.lanes[k].kind == lane_kind)
            .collect();
        if lanes.is_empty() {
            return Err(ScenarioError::Invalid {
                invariant: "traffic_lane_available",
                detail: format!("{count} {prefix}(s) requested but no {lane_kind:?} lane exists"),
            });
        }
        if !(lo >= 0.0 && lo <= hi) {
            return Err(ScenarioError::Invalid {
                invariant: "agent_speed_non_negative",
                detail: format!("{prefix} speed range [{lo}, {hi}] is invalid"),
            });
        }
        for n in 0..count {
            let lane = lanes[rng.random_range(0..lanes.len())];
            let len = Polyline::new(traffic.lanes[lane].points.clone()).length();
            let offset = rng.random::<f64>() * len;
            let speed = lo + rng.random::<f64>() * (hi - lo);
            out.push(AgentSpec {
                id: format!("{prefix}-{}", n + 1),
                kind,
                lane,
                offset,
                speed,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Lane;

    fn spec(agents: Vec<AgentSpec>) -> TrafficSpec {
        TrafficSpec {
            lanes: vec![
                Lane {
                    id: "road".into(),
                    kind: LaneKind::Road,
                    points: vec![Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0), Vec3::new(10.0, 10.0, 0.0)],
                },
                Lane {
                    id: "walk".into(),
                    kind: LaneKind::Sidewalk,
                    points: vec![Vec3::new(0.0, 3.0, 0.0), Vec3::new(10.0, 3.0, 0.0)],
                },
            ],
            agents,
            ..TrafficSpec::empty()
        }
    }

    fn agent(lane: usize, offset: f64, speed: f64) -> AgentSpec {
        AgentSpec {
            id: "a".into(),
            kind: AgentKind::Vehicle,
            lane,
            offset,
            speed,
        }
    }

    #[test]
    fn moves_by_arc_length_across_vertices() {
        let mut t = TrafficState::new(&spec(vec![agent(0, 8.0, 2.0)]));
        step_traffic(&mut t, 2.0);
        let a = &t.agents[0];
        assert!((a.position - Vec3::new(10.0, 2.0, 0.0)).norm() < 1e-12);
        assert!((a.heading - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(a.waypoint, 1);
        assert!((a.velocity - Vec3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ten_meters_per_second_for_two_seconds() {
        let mut long = spec(vec![agent(0, 0.0, 10.0)]);
        long.lanes[0].points.push(Vec3::new(0.0, 10.0, 0.0));
        let mut t = TrafficState::new(&long);
        for _ in 0..100 {
            step_traffic(&mut t, 0.02);
        }
        assert!((t.agents[0].s - 20.0).abs() < 1e-9);
        assert!((t.agents[0].position - Vec3::new(10.0, 10.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn empty_traffic_is_unchanged() {
        let mut t = TrafficState::new(&TrafficSpec::empty());
        step_traffic(&mut t, 1.0);
        assert!(t.is_empty());
    }

    #[test]
    fn wraps_at_lane_end() {
        let mut t = TrafficState::new(&spec(vec![agent(0, 19.0, 2.0)]));
        step_traffic(&mut t, 1.0);
        assert!((t.agents[0].s - 1.0).abs() < 1e-12);
        assert!((t.agents[0].position - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        let at_end = TrafficState::new(&spec(vec![agent(0, 20.0, 0.0)]));
        assert_eq!(at_end.agents[0].s, 0.0);
    }

    #[test]
    fn generation_is_seeded_and_respects_lane_kinds() {
        let plan = TrafficPlan {
            vehicles: 3,
            pedestrians: 2,
            vehicle_speed: [5.0, 10.0],
            pedestrian_speed: [1.0, 1.5],
        };
        let s = spec(vec![]);
        let a = generate_agents(&s, &plan, 7).unwrap();
        assert_eq!(a, generate_agents(&s, &plan, 7).unwrap());
        assert_ne!(a, generate_agents(&s, &plan, 8).unwrap());
        assert_eq!(a.len(), 5);
        for g in &a {
            match g.kind {
                AgentKind::Vehicle => assert!(g.lane == 0 && (5.0..=10.0).contains(&g.speed)),
                AgentKind::Human => assert!(g.lane == 1 && (1.0..=1.5).contains(&g.speed)),
            }
        }
    }

    #[test]
    fn generation_without_matching_lane_fails() {
        let mut s = spec(vec![]);
        s.lanes.truncate(1);
        let plan = TrafficPlan {
            vehicles: 0,
            pedestrians: 1,
            vehicle_speed: [5.0, 10.0],
            pedestrian_speed: [1.0, 1.5],
        };
        let err = generate_agents(&s, &plan, 1).unwrap_err();
        assert_eq!(err.invariant(), Some("traffic_lane_available"));
    }
}
