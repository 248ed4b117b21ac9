use serde::{Deserialize, Serialize};

use crate::dynamics::{
    battery_level, camera_sees, detect_collisions, step_traffic, CollisionReport, ControlInput, DroneState,
    FlightModel, TrafficState,
};
use crate::geometry::Vec3;
use crate::scenario::ScenarioSpec;

/// Horizontal radius around the ground station that counts as the pad.
pub const PAD_RADIUS: f64 = 3.0;
/// Height above the station below which the drone counts as down.
pub const LANDING_ALTITUDE: f64 = 0.2;
/// Speed below which a grounded drone counts as at rest.
pub const LANDING_SPEED: f64 = 0.2;
/// Consecutive settled frames required to finish a landing.
pub const LANDING_FRAMES: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    LandedAtStation,
    CrashTraffic,
    BatteryExhausted,
    Aborted,
}

impl EndReason {
    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::LandedAtStation => "landed_at_station",
            EndReason::CrashTraffic => "crash_traffic",
            EndReason::BatteryExhausted => "battery_exhausted",
            EndReason::Aborted => "aborted",
        }
    }
}

/// Converts held buttons into press edges.
#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeDetector {
    light: bool,
    snapshot: bool,
}

impl EdgeDetector {
    pub fn apply(&mut self, held: ControlInput) -> ControlInput {
        let out = ControlInput {
            light: held.light && !self.light,
            snapshot: held.snapshot && !self.snapshot,
            ..held
        };
        self.light = held.light;
        self.snapshot = held.snapshot;
        out
    }
}

/// Everything the world produced for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFrame {
    pub index: u64,
    /// Clamped input with buttons reduced to edges.
    pub input: ControlInput,
    pub state: DroneState,
    pub collision: CollisionReport,
    /// Defects in view, filled only on snapshot frames.
    pub visible: Vec<String>,
    pub end: Option<EndReason>,
}

/// The simulated world of one session: drone, traffic and end conditions.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: ScenarioSpec,
    model: FlightModel,
    traffic: TrafficState,
    state: DroneState,
    edges: EdgeDetector,
    frame: u64,
    started: bool,
    airborne: bool,
    settled: u32,
    ended: Option<EndReason>,
}

impl Simulator {
    pub fn new(spec: ScenarioSpec) -> Self {
        let model = FlightModel::new(spec.drone.clone(), spec.job.v_max);
        let traffic = TrafficState::new(&spec.traffic);
        let state = DroneState::at_rest(spec.ground_station, spec.job.battery_capacity);
        Self {
            spec,
            model,
            traffic,
            state,
            edges: EdgeDetector::default(),
            frame: 0,
            started: false,
            airborne: false,
            settled: 0,
            ended: None,
        }
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn model(&self) -> &FlightModel {
        &self.model
    }

    pub fn state(&self) -> &DroneState {
        &self.state
    }

    pub fn traffic(&self) -> &TrafficState {
        &self.traffic
    }

    pub fn started(&self) -> bool {
        self.started
    }

    /// Frames simulated so far.
    pub fn frames(&self) -> u64 {
        self.frame
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.ended
    }

    fn on_pad(&self, p: &Vec3) -> bool {
        let g = &self.spec.ground_station;
        (p.x - g.x).hypot(p.y - g.y) <= PAD_RADIUS
    }

    /// Advance one tick with the pilot's held input. Before takeoff the
    /// drone stays on the pad and `None` is returned; the first tick with
    /// an upward command is frame 0.
    pub fn tick(&mut self, held: ControlInput) -> Option<SimFrame> {
        if self.ended.is_some() {
            return None;
        }
        let input = self.edges.apply(held.clamped());
        if !self.started {
            if input.ud > 0.0 {
                self.started = true;
            } else {
                return None;
            }
        }
        let dt = self.spec.job.dt();
        let mut s = self.model.step(&self.state, &input, &self.spec.wind, dt);
        let g = self.spec.ground_station;
        if self.on_pad(&s.position) && s.position.z < g.z {
            s.position.z = g.z;
            s.velocity.z = s.velocity.z.max(0.0);
        }
        let index = self.frame;
        self.frame += 1;
        s.flight_time = self.frame as f64 / self.spec.job.frame_rate;
        s.battery = battery_level(s.flight_time, &self.spec.job);
        step_traffic(&mut self.traffic, dt);
        let collision = detect_collisions(&s, &self.spec, &self.traffic);
        let visible = if input.snapshot {
            self.spec
                .defects
                .iter()
                .filter(|d| camera_sees(&s, &d.position, &self.spec.job))
                .map(|d| d.id.clone())
                .collect()
        } else {
            Vec::new()
        };

        let altitude = s.position.z - g.z;
        if altitude > LANDING_ALTITUDE {
            self.airborne = true;
        }
        let settled = self.airborne
            && self.on_pad(&s.position)
            && altitude < LANDING_ALTITUDE
            && s.speed() < LANDING_SPEED;
        self.settled = if settled { self.settled + 1 } else { 0 };

        let end = if collision.human || collision.vehicle {
            Some(EndReason::CrashTraffic)
        } else if s.flight_time > self.spec.job.tau_max {
            Some(EndReason::BatteryExhausted)
        } else if self.settled >= LANDING_FRAMES {
            Some(EndReason::LandedAtStation)
        } else {
            None
        };
        self.ended = end;
        self.state = s.clone();
        Some(SimFrame {
            index,
            input,
            state: s,
            collision,
            visible,
            end,
        })
    }

    /// Mark the session as aborted.
    pub fn abort(&mut self) {
        self.ended.get_or_insert(EndReason::Aborted);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim() -> Simulator {
        let mut s = crate::testing::tiny_scenario();
        s.ground_station = Vec3::new(0.0, 0.0, 1.0);
        Simulator::new(s)
    }

    #[test]
    fn nothing_happens_before_takeoff() {
        let mut s = sim();
        assert!(s.tick(ControlInput::NEUTRAL).is_none());
        assert!(s.tick(ControlInput::axes(1.0, 0.0, -1.0, 0.0)).is_none());
        assert!(!s.started());
        let f = s.tick(ControlInput::axes(0.0, 0.0, 0.5, 0.0)).unwrap();
        assert_eq!(f.index, 0);
        assert!(f.state.position.z > 1.0);
    }

    #[test]
    fn buttons_become_edges() {
        let mut e = EdgeDetector::default();
        let held = ControlInput { snapshot: true, ..ControlInput::NEUTRAL };
        assert!(e.apply(held).snapshot);
        assert!(!e.apply(held).snapshot);
        assert!(!e.apply(ControlInput::NEUTRAL).snapshot);
        assert!(e.apply(held).snapshot);
    }

    #[test]
    fn takeoff_then_land_on_the_pad() {
        let mut s = sim();
        for _ in 0..50 {
            s.tick(ControlInput::axes(0.0, 0.0, 1.0, 0.0));
        }
        let mut end = None;
        for _ in 0..2000 {
            if let Some(f) = s.tick(ControlInput::axes(0.0, 0.0, -0.2, 0.0)) {
                assert!(f.state.position.z >= 1.0);
                if f.end.is_some() {
                    end = f.end;
                    break;
                }
            }
        }
        assert_eq!(end, Some(EndReason::LandedAtStation));
        assert!(s.tick(ControlInput::NEUTRAL).is_none());
    }

    #[test]
    fn battery_runs_out_after_the_maximum_flight_time() {
        let mut spec = crate::testing::tiny_scenario();
        spec.job.tau_max = 1.0;
        spec.job.tau_min = 0.5;
        let mut s = Simulator::new(spec);
        let up = ControlInput::axes(0.0, 0.0, 0.2, 0.0);
        let frames: Vec<_> = (0..60).filter_map(|_| s.tick(up)).collect();
        // frame i covers time (i + 1) / f, so frame 50 is the first past 1 s
        assert_eq!(frames.len(), 51);
        assert_eq!(frames[50].end, Some(EndReason::BatteryExhausted));
        assert_eq!(frames[49].state.battery, 0.0);
    }
}
