//! Fixed-timestep drone physics and the job-site sensing built on it.
//!
//! The flight model is kinematic with first-order drag: stick deflections
//! command a body-frame velocity, the actual velocity relaxes toward it with
//! time constant `slow_down_time`, and wind adds a constant acceleration.
//! Every update uses plain IEEE add/mul/div in a fixed order so identical
//! inputs yield bit-identical trajectories.

mod battery;
mod camera;
mod collision;
mod traffic;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::scenario::{DroneParams, WindSpec};

pub use battery::{battery_level, drain_battery};
pub use camera::camera_sees;
pub use collision::{detect_collisions, CollisionReport, ContactObject};
pub use traffic::{generate_agents, step_traffic, AgentState, TrafficState};

/// One frame of trainee input. Axes are fractions of the per-axis maximum
/// speed; the two buttons are edge events (true only on the press frame).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Forward (+) / backward (-).
    pub fb: f64,
    /// Right (+) / left (-) sideward.
    pub rl: f64,
    /// Up (+) / down (-).
    pub ud: f64,
    /// Right (+) / left (-) rotation.
    pub rt: f64,
    /// Light toggle.
    #[serde(default)]
    pub light: bool,
    /// Snapshot trigger.
    #[serde(default)]
    pub snapshot: bool,
}

fn clamp_axis(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

impl ControlInput {
    pub const NEUTRAL: ControlInput = ControlInput {
        fb: 0.0,
        rl: 0.0,
        ud: 0.0,
        rt: 0.0,
        light: false,
        snapshot: false,
    };

    pub fn axes(fb: f64, rl: f64, ud: f64, rt: f64) -> Self {
        Self {
            fb,
            rl,
            ud,
            rt,
            ..Self::NEUTRAL
        }
    }

    /// Axes clamped to [-1, 1]; NaN becomes 0.
    pub fn clamped(&self) -> Self {
        Self {
            fb: clamp_axis(self.fb),
            rl: clamp_axis(self.rl),
            ud: clamp_axis(self.ud),
            rt: clamp_axis(self.rt),
            ..*self
        }
    }

    /// Number of axes that `clamped` would change.
    pub fn out_of_range_axes(&self) -> usize {
        [self.fb, self.rl, self.ud, self.rt]
            .into_iter()
            .filter(|v| v.is_nan() || v.abs() > 1.0)
            .count()
    }

    pub fn is_neutral(&self) -> bool {
        *self == Self::NEUTRAL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Heading in radians, counter-clockwise from +x, wrapped to (-pi, pi].
    pub yaw: f64,
    /// Remaining battery, percent.
    pub battery: f64,
    pub light_on: bool,
    /// Seconds since takeoff.
    pub flight_time: f64,
}

impl DroneState {
    pub fn at_rest(position: Vec3, battery: f64) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            yaw: 0.0,
            battery,
            light_on: false,
            flight_time: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Unit vector the drone (and its camera) faces.
    pub fn forward(&self) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c, s, 0.0)
    }

    /// Unit vector to the drone's right.
    pub fn right(&self) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(s, -c, 0.0)
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// The drone's flight model.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightModel {
    pub params: DroneParams,
    /// Upper bound on commanded speed, m/s.
    pub v_max: f64,
}

impl FlightModel {
    pub fn new(params: DroneParams, v_max: f64) -> Self {
        Self { params, v_max }
    }

    /// Heading after applying the rotation stick for one step.
    pub fn next_yaw(&self, yaw: f64, rt: f64, dt: f64) -> f64 {
        wrap_angle(yaw + clamp_axis(rt) * self.params.rotation_rate * dt)
    }

    /// World-frame velocity commanded by `input` at heading `yaw`, limited
    /// to `v_max` in magnitude.
    pub fn commanded_velocity(&self, input: &ControlInput, yaw: f64) -> Vec3 {
        let input = input.clamped();
        let (s, c) = yaw.sin_cos();
        let p = &self.params;
        let fwd = input.fb * p.max_forward_speed;
        let side = input.rl * p.max_sideward_speed;
        let up = input.ud * p.max_vertical_speed;
        let mut cmd = Vec3::new(fwd * c + side * s, fwd * s - side * c, up);
        let n = cmd.norm();
        if n > self.v_max {
            cmd *= self.v_max / n;
        }
        cmd
    }

    /// Fraction of the velocity error removed per step.
    pub fn relaxation(&self, dt: f64) -> f64 {
        if self.params.slow_down_time <= dt {
            1.0
        } else {
            dt / self.params.slow_down_time
        }
    }

    /// Advance one fixed step. Inputs are clamped, never rejected.
    pub fn step(&self, state: &DroneState, input: &ControlInput, wind: &WindSpec, dt: f64) -> DroneState {
        let input = input.clamped();
        let yaw = self.next_yaw(state.yaw, input.rt, dt);
        let cmd = self.commanded_velocity(&input, yaw);
        let alpha = self.relaxation(dt);
        let wind_dv = wind.force() * (dt / self.params.mass);
        let velocity = state.velocity + (cmd - state.velocity) * alpha + wind_dv;
        let position = state.position + velocity * dt;
        DroneState {
            position,
            velocity,
            yaw,
            battery: state.battery,
            light_on: state.light_on ^ input.light,
            flight_time: state.flight_time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{WindLevel, MPH_TO_MPS};
    use proptest::prelude::*;

    fn model() -> FlightModel {
        FlightModel::new(DroneParams::default(), 30.0 * MPH_TO_MPS)
    }

    #[test]
    fn zero_input_hover_is_an_equilibrium() {
        let m = model();
        let s0 = DroneState::at_rest(Vec3::new(1.0, 2.0, 3.0), 100.0);
        let s1 = m.step(&s0, &ControlInput::NEUTRAL, &WindSpec::calm(), 0.02);
        assert_eq!(s1.position, s0.position);
        assert_eq!(s1.yaw, s0.yaw);
        assert_eq!(s1.velocity, Vec3::zeros());
    }

    #[test]
    fn full_forward_reaches_thirty_mph() {
        let m = model();
        let mut s = DroneState::at_rest(Vec3::zeros(), 100.0);
        let input = ControlInput::axes(1.0, 0.0, 0.0, 0.0);
        for _ in 0..3000 {
            s = m.step(&s, &input, &WindSpec::calm(), 0.02);
        }
        assert!((s.speed() - 13.4112).abs() < 1e-9, "{}", s.speed());
        assert!((s.velocity.x - 13.4112).abs() < 1e-9);
    }

    #[test]
    fn medium_wind_adds_force_over_mass_times_dt() {
        let m = model();
        let s0 = DroneState::at_rest(Vec3::zeros(), 100.0);
        let wind = WindSpec::new(WindLevel::Medium, Vec3::new(0.0, 1.0, 0.0));
        let s1 = m.step(&s0, &ControlInput::NEUTRAL, &wind, 0.02);
        // 12 N / 1.2 kg × 0.02 s = 0.2 m/s
        assert!((s1.velocity - Vec3::new(0.0, 0.2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn yaw_integrates_rotation_rate() {
        let m = model();
        let mut s = DroneState::at_rest(Vec3::zeros(), 100.0);
        for _ in 0..50 {
            s = m.step(&s, &ControlInput::axes(0.0, 0.0, 0.0, 1.0), &WindSpec::calm(), 0.02);
        }
        assert!((s.yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        // sideways right at yaw = 90° points along -x
        let cmd = m.commanded_velocity(&ControlInput::axes(0.0, 0.5, 0.0, 0.0), s.yaw);
        assert!((cmd - Vec3::new(0.5 * 13.4112, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn light_toggles_on_each_edge() {
        let m = model();
        let s0 = DroneState::at_rest(Vec3::zeros(), 100.0);
        let press = ControlInput { light: true, ..ControlInput::NEUTRAL };
        let s1 = m.step(&s0, &press, &WindSpec::calm(), 0.02);
        let s2 = m.step(&s1, &ControlInput::NEUTRAL, &WindSpec::calm(), 0.02);
        let s3 = m.step(&s2, &press, &WindSpec::calm(), 0.02);
        assert!(s1.light_on && s2.light_on && !s3.light_on);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn steady_state_without_drag_matches_command(fb in -1.0f64..1.0, rl in -1.0f64..1.0, ud in -1.0f64..1.0) {
            let params = DroneParams { slow_down_time: 0.0, ..DroneParams::default() };
            let m = FlightModel::new(params, 1e9);
            let s = m.step(&DroneState::at_rest(Vec3::zeros(), 100.0), &ControlInput::axes(fb, rl, ud, 0.0), &WindSpec::calm(), 0.02);
            let expect = (fb * 13.4112).powi(2) + (rl * 13.4112).powi(2) + (ud * 5.0).powi(2);
            prop_assert!((s.speed() - expect.sqrt()).abs() < 1e-9);
        }

        #[test]
        fn stepping_is_deterministic(seq in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 1..60)) {
            let m = model();
            let wind = WindSpec::new(WindLevel::Gentle, Vec3::new(0.6, 0.8, 0.0));
            let run = || {
                let mut s = DroneState::at_rest(Vec3::zeros(), 100.0);
                let mut out = Vec::new();
                for (a, b, c, d) in &seq {
                    s = m.step(&s, &ControlInput::axes(*a, *b, *c, *d), &wind, 0.02);
                    out.push((s.position.map(f64::to_bits), s.velocity.map(f64::to_bits), s.yaw.to_bits()));
                }
                out
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn speed_bounded_by_vmax_plus_wind_lag(seq in proptest::collection::vec((-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5), 1..400)) {
            let m = model();
            let wind = WindSpec::new(WindLevel::Medium, Vec3::new(1.0, 0.0, 0.0));
            // steady wind offset is a·tau; one extra step of a·dt of slack
            let eps = 12.0 / 1.2 * (0.5 + 0.02);
            let mut s = DroneState::at_rest(Vec3::zeros(), 100.0);
            for (a, b, c) in &seq {
                s = m.step(&s, &ControlInput::axes(*a, *b, *c, 0.0), &wind, 0.02);
                prop_assert!(s.speed() <= m.v_max + eps + 1e-9);
            }
        }
    }
}
