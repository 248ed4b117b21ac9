use serde::{Deserialize, Serialize};

use super::{DroneState, TrafficState};
use crate::geometry::Vec3;
use crate::scenario::{AgentKind, ElementKind, ScenarioSpec, TrafficSpec};

/// A scene element the drone is touching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactObject {
    pub id: String,
    pub kind: ElementKind,
}

/// Per-frame contact flags and the proximity reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub human: bool,
    pub vehicle: bool,
    /// Nearest crashable element overlapping the drone sphere, if any.
    pub other: Option<ContactObject>,
    /// Gap between the drone sphere and the nearest object, floored at 0.
    pub min_clearance: f64,
}

impl CollisionReport {
    pub fn clear(min_clearance: f64) -> Self {
        Self {
            human: false,
            vehicle: false,
            other: None,
            min_clearance,
        }
    }

    pub fn any_contact(&self) -> bool {
        self.human || self.vehicle || self.other.is_some()
    }
}

fn vehicle_distance(p: &Vec3, base: &Vec3, heading: f64, half: &Vec3) -> f64 {
    let d = p - Vec3::new(base.x, base.y, base.z + half.z);
    let (s, c) = heading.sin_cos();
    let local = Vec3::new(d.x * c + d.y * s, -d.x * s + d.y * c, d.z);
    let outside = Vec3::new(
        (local.x.abs() - half.x).max(0.0),
        (local.y.abs() - half.y).max(0.0),
        (local.z.abs() - half.z).max(0.0),
    );
    outside.norm()
}

fn human_distance(p: &Vec3, base: &Vec3, radius: f64, height: f64) -> f64 {
    let radial = ((p.x - base.x).powi(2) + (p.y - base.y).powi(2)).sqrt();
    let dr = (radial - radius).max(0.0);
    let dz = if p.z < base.z {
        base.z - p.z
    } else if p.z > base.z + height {
        p.z - base.z - height
    } else {
        0.0
    };
    (dr * dr + dz * dz).sqrt()
}

/// Distance from `p` to a traffic agent's body.
pub(crate) fn agent_distance(p: &Vec3, kind: AgentKind, base: &Vec3, heading: f64, spec: &TrafficSpec) -> f64 {
    match kind {
        AgentKind::Vehicle => vehicle_distance(p, base, heading, &spec.vehicle_half_extents),
        AgentKind::Human => human_distance(p, base, spec.pedestrian_radius, spec.pedestrian_height),
    }
}

/// Test the drone sphere against every scene element and traffic agent.
/// Contact means the surface distance is at most the drone radius.
pub fn detect_collisions(state: &DroneState, scenario: &ScenarioSpec, traffic: &TrafficState) -> CollisionReport {
    let r = scenario.drone.radius;
    let p = &state.position;
    let mut nearest = f64::INFINITY;
    let mut other: Option<(&str, ElementKind, f64)> = None;
    for e in &scenario.elements {
        let d = e.shape.distance(p);
        nearest = nearest.min(d);
        if e.crashable && d <= r {
            let better = match other {
                None => true,
                Some((id, _, bd)) => d < bd || (d == bd && e.id.as_str() < id),
            };
            if better {
                other = Some((e.id.as_str(), e.kind, d));
            }
        }
    }
    let mut human = false;
    let mut vehicle = false;
    for a in &traffic.agents {
        let d = agent_distance(p, a.kind, &a.position, a.heading, &scenario.traffic);
        nearest = nearest.min(d);
        if d <= r {
            match a.kind {
                AgentKind::Human => human = true,
                AgentKind::Vehicle => vehicle = true,
            }
        }
    }
    let min_clearance = if nearest.is_finite() { (nearest - r).max(0.0) } else { f64::INFINITY };
    CollisionReport {
        human,
        vehicle,
        other: other.map(|(id, kind, _)| ContactObject { id: id.to_string(), kind }),
        min_clearance,
    }
}
