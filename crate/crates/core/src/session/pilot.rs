//! Input sources: the trait the session loop samples once per tick, plus
//! scripted pilots read from JSON files.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{camera_sees, wrap_angle, ControlInput, DroneState, FlightModel};
use crate::error::SessionError;
use crate::geometry::Vec3;
use crate::scenario::ScenarioSpec;

/// What an input source can see when asked for the next input.
#[derive(Debug, Clone, Copy)]
pub struct InputContext<'a> {
    /// Ticks sampled so far, including those before takeoff.
    pub tick: u64,
    /// Whether the drone has taken off.
    pub started: bool,
    pub state: &'a DroneState,
}

/// A pilot. Returning `None` means the source is exhausted or has failed,
/// which aborts the session.
pub trait InputSource {
    fn next_input(&mut self, ctx: &InputContext<'_>) -> Option<ControlInput>;
}

/// Held input over a half-open tick range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub start: u64,
    pub end: u64,
    pub input: ControlInput,
}

/// Open-loop pilot: a sorted list of non-overlapping tick ranges. Ticks
/// between ranges are neutral; the pilot is exhausted after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedPilot {
    entries: Vec<TimelineEntry>,
    cursor: usize,
}

impl ScriptedPilot {
    pub fn new(entries: Vec<TimelineEntry>) -> Result<Self, SessionError> {
        for (k, e) in entries.iter().enumerate() {
            if e.start >= e.end {
                return Err(SessionError::Pilot(format!("entry {k}: empty range {}..{}", e.start, e.end)));
            }
            if k > 0 && entries[k - 1].end > e.start {
                return Err(SessionError::Pilot(format!("entry {k} overlaps or precedes entry {}", k - 1)));
            }
        }
        Ok(Self { entries, cursor: 0 })
    }

    pub fn entries(&self) -> &[TimelineEntry] {
        &self.entries
    }
}

impl InputSource for ScriptedPilot {
    fn next_input(&mut self, ctx: &InputContext<'_>) -> Option<ControlInput> {
        while self.cursor < self.entries.len() && self.entries[self.cursor].end <= ctx.tick {
            self.cursor += 1;
        }
        let e = self.entries.get(self.cursor)?;
        Some(if e.start <= ctx.tick { e.input } else { ControlInput::NEUTRAL })
    }
}

/// Replays a fixed per-frame input sequence starting at takeoff.
#[derive(Debug, Clone)]
pub struct FrameInputs {
    inputs: Vec<ControlInput>,
    next: usize,
}

impl FrameInputs {
    pub fn new(inputs: Vec<ControlInput>) -> Self {
        Self { inputs, next: 0 }
    }
}

impl InputSource for FrameInputs {
    fn next_input(&mut self, _: &InputContext<'_>) -> Option<ControlInput> {
        let i = self.inputs.get(self.next).copied();
        self.next += 1;
        i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heading {
    /// Face the direction of horizontal travel.
    Travel,
    /// Hold a fixed heading, degrees counter-clockwise from +x.
    Fixed(f64),
    /// Face a point in the horizontal plane.
    Face([f64; 2]),
}

fn default_heading() -> Heading {
    Heading::Travel
}

/// One leg of a route: fly through `waypoints` in order at `speed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leg {
    #[serde(default)]
    pub name: String,
    pub waypoints: Vec<[f64; 3]>,
    /// m/s
    pub speed: f64,
    #[serde(default = "default_heading")]
    pub heading: Heading,
    /// Desired light state during the leg; toggled at the leg start.
    #[serde(default)]
    pub light: Option<bool>,
    /// Take a snapshot whenever a not yet photographed defect is in view.
    #[serde(default)]
    pub snapshots: bool,
}

/// A route flown by the closed-loop planner, ending with a landing at the
/// ground station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub legs: Vec<Leg>,
    /// Descent speed over the pad, m/s.
    #[serde(default = "default_descent")]
    pub landing_speed: f64,
    /// Deceleration used when approaching a stop, m/s².
    #[serde(default = "default_braking")]
    pub braking: f64,
}

fn default_descent() -> f64 {
    0.6
}

fn default_braking() -> f64 {
    2.0
}

/// A pilot file: either an explicit timeline or a route for the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PilotFile {
    Timeline { entries: Vec<TimelineEntry> },
    Route(Route),
}

impl PilotFile {
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        serde_json::from_str(text).map_err(|e| SessionError::Pilot(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Build the input source for a scenario.
    pub fn into_source(self, scenario: &ScenarioSpec) -> Result<Box<dyn InputSource + Send>, SessionError> {
        Ok(match self {
            PilotFile::Timeline { entries } => Box::new(ScriptedPilot::new(entries)?),
            PilotFile::Route(r) => Box::new(RoutePilot::new(r, scenario)?),
        })
    }
}

const WAYPOINT_TOLERANCE: f64 = 0.05;
const STOP_SPEED: f64 = 0.1;

/// Closed-loop route follower. Each tick it picks the velocity that puts
/// the drone on course at the next step, cancelling wind, and inverts the
/// flight model's relaxation to find the stick input that produces it.
#[derive(Debug, Clone)]
pub struct RoutePilot {
    route: Route,
    model: FlightModel,
    wind_dv: Vec3,
    dt: f64,
    station: Vec3,
    scenario: ScenarioSpec,
    leg: usize,
    waypoint: usize,
    light_pressed: bool,
    snap_pressed: bool,
    photographed: BTreeSet<String>,
    landing: bool,
}

impl RoutePilot {
    pub fn new(route: Route, scenario: &ScenarioSpec) -> Result<Self, SessionError> {
        for (k, l) in route.legs.iter().enumerate() {
            if l.waypoints.is_empty() || !(l.speed > 0.0) {
                return Err(SessionError::Pilot(format!("leg {k} needs waypoints and a positive speed")));
            }
        }
        let dt = scenario.job.dt();
        Ok(Self {
            model: FlightModel::new(scenario.drone.clone(), scenario.job.v_max),
            wind_dv: scenario.wind.force() * (dt / scenario.drone.mass),
            dt,
            station: scenario.ground_station,
            scenario: scenario.clone(),
            route,
            leg: 0,
            waypoint: 0,
            light_pressed: false,
            snap_pressed: false,
            photographed: BTreeSet::new(),
            landing: false,
        })
    }

    /// Target point, cruise speed and whether the drone must stop there.
    fn target(&mut self, p: &Vec3, v: &Vec3) -> (Vec3, f64, bool) {
        loop {
            if self.leg >= self.route.legs.len() {
                self.landing = true;
                let hover = Vec3::new(self.station.x, self.station.y, p.z);
                let over_pad = (p.x - self.station.x).hypot(p.y - self.station.y) < 0.5;
                return if over_pad {
                    (self.station, self.route.landing_speed, true)
                } else {
                    (hover, self.route.legs.last().map_or(4.0, |l| l.speed), true)
                };
            }
            let leg = &self.route.legs[self.leg];
            let last = self.waypoint + 1 == leg.waypoints.len();
            let w = Vec3::from(leg.waypoints[self.waypoint]);
            let d = (w - p).norm();
            let reached = if last {
                d < WAYPOINT_TOLERANCE && v.norm() < STOP_SPEED
            } else {
                d < (leg.speed * self.dt * 2.0).max(WAYPOINT_TOLERANCE)
            };
            if !reached {
                return (w, leg.speed, last);
            }
            self.waypoint += 1;
            if self.waypoint == leg.waypoints.len() {
                self.leg += 1;
                self.waypoint = 0;
            }
        }
    }

    fn desired_yaw(&self, state: &DroneState, v_des: &Vec3) -> f64 {
        let heading = self.route.legs.get(self.leg).map_or(Heading::Travel, |l| l.heading);
        match heading {
            Heading::Fixed(deg) => deg.to_radians(),
            Heading::Face([x, y]) => (y - state.position.y).atan2(x - state.position.x),
            Heading::Travel if v_des.x.hypot(v_des.y) > 0.3 => v_des.y.atan2(v_des.x),
            Heading::Travel => state.yaw,
        }
    }

    fn control(&mut self, state: &DroneState) -> ControlInput {
        let (target, speed, stop) = self.target(&state.position, &state.velocity);
        let to = target - state.position;
        let d = to.norm();
        let mut v_mag = speed;
        if stop {
            v_mag = v_mag.min((2.0 * self.route.braking * d).sqrt());
        }
        let v_des = if d > 0.0 { to * (v_mag.min(d / self.dt) / d) } else { Vec3::zeros() };

        let p = &self.model.params;
        let yaw_err = wrap_angle(self.desired_yaw(state, &v_des) - state.yaw);
        let rt = (yaw_err / (p.rotation_rate * self.dt)).clamp(-1.0, 1.0);
        let yaw = self.model.next_yaw(state.yaw, rt, self.dt);

        let alpha = self.model.relaxation(self.dt);
        let mut c = state.velocity + (v_des - state.velocity - self.wind_dv) / alpha;
        let n = c.norm();
        if n > self.model.v_max {
            c *= self.model.v_max / n;
        }
        if c.z.abs() > p.max_vertical_speed {
            c *= p.max_vertical_speed / c.z.abs();
        }
        let (s, co) = yaw.sin_cos();
        let fb = (c.x * co + c.y * s) / p.max_forward_speed;
        let rl = (c.x * s - c.y * co) / p.max_sideward_speed;
        let ud = c.z / p.max_vertical_speed;
        ControlInput::axes(fb.clamp(-1.0, 1.0), rl.clamp(-1.0, 1.0), ud.clamp(-1.0, 1.0), rt)
    }

    fn buttons(&mut self, state: &DroneState, input: &mut ControlInput) {
        let Some(leg) = self.route.legs.get(self.leg) else {
            self.light_pressed = false;
            self.snap_pressed = false;
            return;
        };
        let want_light = leg.light;
        let snapshots = leg.snapshots;
        input.light = !self.light_pressed && want_light.is_some_and(|on| on != state.light_on);
        self.light_pressed = input.light;
        if snapshots && !self.snap_pressed {
            let next = self.model.step(state, input, &self.scenario.wind, self.dt);
            let fresh: Vec<String> = self
                .scenario
                .defects
                .iter()
                .filter(|d| !self.photographed.contains(&d.id) && camera_sees(&next, &d.position, &self.scenario.job))
                .map(|d| d.id.clone())
                .collect();
            if !fresh.is_empty() {
                input.snapshot = true;
                self.photographed.extend(fresh);
            }
        }
        self.snap_pressed = input.snapshot;
    }

    pub fn is_landing(&self) -> bool {
        self.landing
    }
}

impl InputSource for RoutePilot {
    fn next_input(&mut self, ctx: &InputContext<'_>) -> Option<ControlInput> {
        let mut input = self.control(ctx.state);
        if !ctx.started && input.ud <= 0.0 {
            // nudge upward so the first tick counts as takeoff
            input.ud = input.ud.max(1e-3);
        }
        if ctx.started {
            self.buttons(ctx.state, &mut input);
        }
        Some(input)
    }
}
