use serde::{Deserialize, Serialize};

use super::events::FrameRecord;
use super::path::Assignment;
use crate::scenario::MPH_TO_MPS;

/// Off-path distance within which the trainee is reminded of the path.
pub const DISTANCE_REMINDER_RANGE: f64 = 8.0;
/// Clearance at or below which the obstacle warning shows.
pub const PROXIMITY_RANGE: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryColor {
    Green,
    Yellow,
    Red,
}

/// Green at 70 % or more, red below 30 %, yellow in between.
pub fn battery_color(b: f64) -> BatteryColor {
    if b >= 70.0 {
        BatteryColor::Green
    } else if b >= 30.0 {
        BatteryColor::Yellow
    } else {
        BatteryColor::Red
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Speeding,
    DistanceReminder,
    ProximityOrCrash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub kind: FeedbackKind,
    pub text: String,
    pub frame: u64,
}

/// Heads-up display state for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hud {
    pub battery: f64,
    pub battery_color: BatteryColor,
    pub battery_flashing: bool,
    /// m/s
    pub speed: f64,
    pub speed_mph: f64,
    pub altitude: f64,
    pub task: Option<u32>,
    pub light_on: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub hud: Hud,
    /// Messages whose trigger holds this frame.
    pub messages: Vec<FeedbackMessage>,
}

/// HUD and active messages for a frame. `contact_rising` tells whether a
/// contact flag turned on this frame.
pub fn feedback_tick(frame: &FrameRecord, assignment: &Assignment, contact_rising: bool) -> Feedback {
    let b = frame.drone.b;
    let color = battery_color(b);
    let hud = Hud {
        battery: b,
        battery_color: color,
        battery_flashing: color == BatteryColor::Red,
        speed: frame.drone.v,
        speed_mph: frame.drone.v / MPH_TO_MPS,
        altitude: frame.drone.pos.z,
        task: assignment.task(),
        light_on: frame.light,
    };
    let mut messages = Vec::new();
    let mut push = |kind, text: String| {
        messages.push(FeedbackMessage {
            kind,
            text,
            frame: frame.index,
        })
    };
    if frame.speeding {
        push(FeedbackKind::Speeding, "You are speeding. Slow down to stay under the speed limit.".into());
    }
    if assignment.assigned.is_none() {
        if let Some((t, l)) = assignment.nearest {
            if l <= DISTANCE_REMINDER_RANGE {
                push(
                    FeedbackKind::DistanceReminder,
                    format!("You are {l:.1} m from the path of task {t}. Move closer to inspect."),
                );
            }
        }
    }
    let c = &frame.collision;
    if c.min_clearance <= PROXIMITY_RANGE || contact_rising {
        let text = if c.any_contact() {
            "Crash! The drone touched an obstacle."
        } else {
            "Obstacle within 2.5 m. Keep your distance."
        };
        push(FeedbackKind::ProximityOrCrash, text.into());
    }
    Feedback { hud, messages }
}

/// Reduces the per-frame active messages to onsets.
#[derive(Debug, Clone, Default)]
pub struct OnsetFilter {
    active: Vec<FeedbackKind>,
}

impl OnsetFilter {
    pub fn onsets(&mut self, messages: &[FeedbackMessage]) -> Vec<FeedbackMessage> {
        let out = messages
            .iter()
            .filter(|m| !self.active.contains(&m.kind))
            .cloned()
            .collect();
        self.active = messages.iter().map(|m| m.kind).collect();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{CollisionReport, ControlInput};
    use crate::geometry::Vec3;
    use crate::telemetry::DroneSample;

    fn frame(b: f64, clearance: f64, speeding: bool) -> FrameRecord {
        FrameRecord {
            index: 3,
            input: ControlInput::NEUTRAL,
            drone: DroneSample { pos: Vec3::new(0.0, 0.0, 12.0), v: 2.0, b },
            yaw: 0.0,
            light: false,
            task: None,
            l_star: None,
            speeding,
            collision: CollisionReport::clear(clearance),
        }
    }

    fn off_path(l: f64) -> Assignment {
        Assignment { assigned: None, nearest: Some((2, l)) }
    }

    fn kinds(f: &Feedback) -> Vec<FeedbackKind> {
        f.messages.iter().map(|m| m.kind).collect()
    }

    #[test]
    fn battery_color_boundaries() {
        assert_eq!(battery_color(100.0), BatteryColor::Green);
        assert_eq!(battery_color(70.0), BatteryColor::Green);
        assert_eq!(battery_color(69.999), BatteryColor::Yellow);
        assert_eq!(battery_color(30.0), BatteryColor::Yellow);
        assert_eq!(battery_color(29.9), BatteryColor::Red);
        assert_eq!(battery_color(0.0), BatteryColor::Red);
        let f = feedback_tick(&frame(29.9, 9.0, false), &off_path(20.0), false);
        assert!(f.hud.battery_flashing);
        assert!(!feedback_tick(&frame(30.0, 9.0, false), &off_path(20.0), false).hud.battery_flashing);
    }

    #[test]
    fn distance_reminder_only_off_path_and_close() {
        let f = |a| kinds(&feedback_tick(&frame(90.0, 9.0, false), &a, false));
        assert_eq!(f(off_path(7.5)), vec![FeedbackKind::DistanceReminder]);
        assert_eq!(f(off_path(8.0)), vec![FeedbackKind::DistanceReminder]);
        assert!(f(off_path(8.5)).is_empty());
        let on = Assignment { assigned: Some((2, 1.0)), nearest: Some((2, 1.0)) };
        assert!(f(on).is_empty());
    }

    #[test]
    fn proximity_and_speeding_triggers() {
        let f = |c, s, r| kinds(&feedback_tick(&frame(90.0, c, s), &off_path(30.0), r));
        assert_eq!(f(2.5, false, false), vec![FeedbackKind::ProximityOrCrash]);
        assert!(f(2.51, false, false).is_empty());
        assert_eq!(f(9.0, false, true), vec![FeedbackKind::ProximityOrCrash]);
        assert_eq!(f(9.0, true, false), vec![FeedbackKind::Speeding]);
    }

    #[test]
    fn onsets_fire_once_per_activation() {
        let mut o = OnsetFilter::default();
        let msg = |k| FeedbackMessage { kind: k, text: String::new(), frame: 0 };
        assert_eq!(o.onsets(&[msg(FeedbackKind::Speeding)]).len(), 1);
        assert!(o.onsets(&[msg(FeedbackKind::Speeding)]).is_empty());
        assert!(o.onsets(&[]).is_empty());
        assert_eq!(o.onsets(&[msg(FeedbackKind::Speeding)]).len(), 1);
    }
}
