//! JSON scenario documents.
//!
//! Speeds may be bare numbers (interpreted in `units.speed`, default m/s)
//! or strings with a unit suffix such as `"10 mph"` or `"4.5 m/s"`.
//! Lengths are always meters.

use std::path::Path;

use serde::Deserialize;

use super::{
    invalid, AgentKind, AgentSpec, BridgeElement, DefectPlan, DefectSpec, DroneParams, ElementKind,
    JobSpec, Lane, ScenarioSpec, ScoringWeights, TaskSpec, TrafficPlan, TrafficSpec, WindLevel,
    WindSpec,
};
use crate::error::ScenarioError;
use crate::geometry::{Shape, Vec3};

/// Exact statute-mile-per-hour conversion.
pub const MPH_TO_MPS: f64 = 0.44704;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
enum SpeedUnit {
    #[default]
    #[serde(rename = "m/s")]
    MetersPerSecond,
    #[serde(rename = "mph")]
    Mph,
}

impl SpeedUnit {
    fn factor(self) -> f64 {
        match self {
            SpeedUnit::MetersPerSecond => 1.0,
            SpeedUnit::Mph => MPH_TO_MPS,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Units {
    #[serde(default)]
    length: Option<String>,
    #[serde(default)]
    speed: SpeedUnit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Speed {
    Number(f64),
    Text(String),
}

impl Speed {
    fn to_mps(&self, default_unit: SpeedUnit, field: &str) -> Result<f64, ScenarioError> {
        match self {
            Speed::Number(v) => Ok(v * default_unit.factor()),
            Speed::Text(s) => {
                let s = s.trim();
                let (num, unit) = if let Some(n) = s.strip_suffix("mph") {
                    (n, SpeedUnit::Mph)
                } else if let Some(n) = s.strip_suffix("m/s") {
                    (n, SpeedUnit::MetersPerSecond)
                } else {
                    (s, default_unit)
                };
                let v: f64 = num.trim().parse().map_err(|_| {
                    ScenarioError::Parse(format!("`{field}`: cannot read speed `{s}`"))
                })?;
                Ok(v * unit.factor())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    version: u32,
    #[serde(default)]
    name: String,
    #[serde(default)]
    units: Units,
    #[serde(default)]
    seed: u64,
    ground_station: [f64; 3],
    elements: Vec<ElementDoc>,
    tasks: Vec<TaskDoc>,
    #[serde(default)]
    defects: Vec<DefectSpec>,
    #[serde(default)]
    defect_placement: Option<DefectPlan>,
    #[serde(default)]
    wind: Option<WindDoc>,
    #[serde(default)]
    traffic: Option<TrafficDoc>,
    #[serde(default)]
    job: JobDoc,
    #[serde(default)]
    drone: DroneDoc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementDoc {
    id: String,
    kind: ElementKind,
    shape: Shape,
    #[serde(default = "yes")]
    crashable: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    id: u32,
    #[serde(default)]
    name: String,
    reference_points: Vec<[f64; 3]>,
    #[serde(default)]
    corridor_threshold: Option<f64>,
    recommended_distance: [f64; 2],
    #[serde(default)]
    speed_limit: Option<Speed>,
    #[serde(default)]
    light_required: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindDoc {
    level: WindLevel,
    #[serde(default)]
    direction: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrafficDoc {
    #[serde(default)]
    lanes: Vec<Lane>,
    #[serde(default)]
    agents: Vec<AgentDoc>,
    #[serde(default)]
    generate: Option<TrafficPlanDoc>,
    #[serde(default)]
    vehicle_half_extents: Option<[f64; 3]>,
    #[serde(default)]
    pedestrian_radius: Option<f64>,
    #[serde(default)]
    pedestrian_height: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    #[serde(default)]
    id: Option<String>,
    kind: AgentKind,
    lane: String,
    #[serde(default)]
    offset: f64,
    speed: Speed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrafficPlanDoc {
    #[serde(default)]
    vehicles: usize,
    #[serde(default)]
    pedestrians: usize,
    vehicle_speed: [Speed; 2],
    pedestrian_speed: [Speed; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc {
    on_path: Option<f64>,
    speeding: Option<f64>,
    efficiency_base: Option<f64>,
    efficiency_slope: Option<f64>,
    battery_failure: Option<f64>,
    crash_human: Option<f64>,
    crash_vehicle: Option<f64>,
    crash_other: Option<f64>,
    accuracy: Option<f64>,
    safety_floor: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct JobDoc {
    tau_min: f64,
    tau_max: f64,
    frame_rate: f64,
    v_max: Speed,
    speed_limit: Speed,
    weights: WeightsDoc,
    battery_capacity: f64,
    snapshot_range: f64,
    camera_fov: [f64; 2],
}

impl Default for JobDoc {
    fn default() -> Self {
        Self {
            tau_min: 900.0,
            tau_max: 1500.0,
            frame_rate: 50.0,
            v_max: Speed::Text("30 mph".into()),
            speed_limit: Speed::Text("10 mph".into()),
            weights: WeightsDoc::default(),
            battery_capacity: 100.0,
            snapshot_range: 10.0,
            camera_fov: [70.0, 50.0],
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DroneDoc {
    mass: Option<f64>,
    max_forward_speed: Option<Speed>,
    max_sideward_speed: Option<Speed>,
    max_vertical_speed: Option<Speed>,
    rotation_rate_deg: Option<f64>,
    slow_down_time: Option<f64>,
    radius: Option<f64>,
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::from(a)
}

/// Parse and validate a scenario document.
pub fn load_scenario(source: &str) -> Result<ScenarioSpec, ScenarioError> {
    let doc: ScenarioDoc =
        serde_json::from_str(source).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    build(doc)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<ScenarioSpec, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_scenario(&text)
}

fn build(doc: ScenarioDoc) -> Result<ScenarioSpec, ScenarioError> {
    if doc.version != SCENARIO_FORMAT_VERSION {
        return Err(invalid(
            "version_supported",
            format!("version {} (supported: {SCENARIO_FORMAT_VERSION})", doc.version),
        ));
    }
    if let Some(len) = &doc.units.length {
        if len != "m" {
            return Err(invalid("length_unit_meters", format!("unsupported length unit `{len}`")));
        }
    }
    let unit = doc.units.speed;
    let job_doc = &doc.job;
    let v_max = job_doc.v_max.to_mps(unit, "job.v_max")?;
    let default_limit = job_doc.speed_limit.to_mps(unit, "job.speed_limit")?;

    let elements = doc
        .elements
        .into_iter()
        .map(|e| BridgeElement {
            id: e.id,
            kind: e.kind,
            shape: e.shape,
            crashable: e.crashable,
        })
        .collect();

    let mut tasks = Vec::with_capacity(doc.tasks.len());
    for t in doc.tasks {
        let speed_limit = match &t.speed_limit {
            Some(s) => s.to_mps(unit, "tasks.speed_limit")?,
            None => default_limit,
        };
        tasks.push(TaskSpec {
            id: t.id,
            name: t.name,
            reference_points: t.reference_points.into_iter().map(v3).collect(),
            // the recommended stand-off doubles as the corridor half-width
            corridor_threshold: t.corridor_threshold.unwrap_or(t.recommended_distance[1]),
            recommended_distance: t.recommended_distance,
            speed_limit,
            light_required: t.light_required,
        });
    }
    if tasks.is_empty() {
        return Err(invalid("task_count_positive", "at least one task is required"));
    }
    let min_limit = tasks.iter().map(|t| t.speed_limit).fold(f64::INFINITY, f64::min);

    let mut weights = ScoringWeights::derived(tasks.len(), v_max, min_limit, job_doc.tau_min, job_doc.tau_max);
    let w = &job_doc.weights;
    let overrides = [
        (&mut weights.on_path, w.on_path),
        (&mut weights.speeding, w.speeding),
        (&mut weights.efficiency_base, w.efficiency_base),
        (&mut weights.battery_failure, w.battery_failure),
        (&mut weights.crash_human, w.crash_human),
        (&mut weights.crash_vehicle, w.crash_vehicle),
        (&mut weights.crash_other, w.crash_other),
        (&mut weights.accuracy, w.accuracy),
        (&mut weights.safety_floor, w.safety_floor),
        (&mut weights.beta, w.beta),
    ];
    for (slot, value) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    weights.efficiency_slope = w
        .efficiency_slope
        .unwrap_or(-weights.efficiency_base / (job_doc.tau_max - job_doc.tau_min));

    let job = JobSpec {
        tau_min: job_doc.tau_min,
        tau_max: job_doc.tau_max,
        frame_rate: job_doc.frame_rate,
        v_max,
        weights,
        battery_capacity: job_doc.battery_capacity,
        snapshot_range: job_doc.snapshot_range,
        camera_fov: job_doc.camera_fov,
    };

    let wind = match doc.wind {
        None => WindSpec::calm(),
        Some(w) => {
            let dir = w.direction.map(v3).unwrap_or_else(Vec3::x);
            let n = dir.norm();
            if w.level != WindLevel::None && !(n > 0.0) {
                return Err(invalid("wind_direction_unit", "wind direction must be non-zero"));
            }
            let dir = if n > 0.0 { dir / n } else { Vec3::x() };
            WindSpec::new(w.level, dir)
        }
    };

    let defaults = DroneParams::default();
    let d = &doc.drone;
    let drone = DroneParams {
        mass: d.mass.unwrap_or(defaults.mass),
        max_forward_speed: match &d.max_forward_speed {
            Some(s) => s.to_mps(unit, "drone.max_forward_speed")?,
            None => v_max,
        },
        max_sideward_speed: match &d.max_sideward_speed {
            Some(s) => s.to_mps(unit, "drone.max_sideward_speed")?,
            None => v_max,
        },
        max_vertical_speed: match &d.max_vertical_speed {
            Some(s) => s.to_mps(unit, "drone.max_vertical_speed")?,
            None => defaults.max_vertical_speed,
        },
        rotation_rate: d
            .rotation_rate_deg
            .map(f64::to_radians)
            .unwrap_or(defaults.rotation_rate),
        slow_down_time: d.slow_down_time.unwrap_or(defaults.slow_down_time),
        radius: d.radius.unwrap_or(defaults.radius),
    };

    let traffic = match doc.traffic {
        None => TrafficSpec::empty(),
        Some(t) => build_traffic(t, unit)?,
    };

    if !doc.defects.is_empty() && doc.defect_placement.is_some() {
        return Err(invalid(
            "defect_source_unique",
            "give either `defects` or `defect_placement`, not both",
        ));
    }

    let spec = ScenarioSpec {
        name: doc.name,
        elements,
        tasks,
        defects: doc.defects,
        defect_plan: doc.defect_placement,
        wind,
        traffic,
        ground_station: v3(doc.ground_station),
        job,
        drone,
        seed: doc.seed,
    };
    spec.validate()?;
    spec.reseeded(doc.seed)
}

fn build_traffic(t: TrafficDoc, unit: SpeedUnit) -> Result<TrafficSpec, ScenarioError> {
    let mut spec = TrafficSpec::empty();
    if let Some(e) = t.vehicle_half_extents {
        spec.vehicle_half_extents = v3(e);
    }
    if let Some(r) = t.pedestrian_radius {
        spec.pedestrian_radius = r;
    }
    if let Some(h) = t.pedestrian_height {
        spec.pedestrian_height = h;
    }
    spec.lanes = t.lanes;
    for (k, a) in t.agents.iter().enumerate() {
        let lane = spec
            .lanes
            .iter()
            .position(|l| l.id == a.lane)
            .ok_or_else(|| invalid("agent_lane_exists", format!("unknown lane `{}`", a.lane)))?;
        spec.agents.push(AgentSpec {
            id: a.id.clone().unwrap_or_else(|| format!("agent-{}", k + 1)),
            kind: a.kind,
            lane,
            offset: a.offset,
            speed: a.speed.to_mps(unit, "traffic.agents.speed")?,
        });
    }
    if let Some(g) = t.generate {
        if !spec.agents.is_empty() {
            return Err(invalid(
                "traffic_source_unique",
                "give either explicit `agents` or `generate`, not both",
            ));
        }
        let range = |r: &[Speed; 2], f: &str| -> Result<[f64; 2], ScenarioError> {
            Ok([r[0].to_mps(unit, f)?, r[1].to_mps(unit, f)?])
        };
        spec.plan = Some(TrafficPlan {
            vehicles: g.vehicles,
            pedestrians: g.pedestrians,
            vehicle_speed: range(&g.vehicle_speed, "traffic.generate.vehicle_speed")?,
            pedestrian_speed: range(&g.pedestrian_speed, "traffic.generate.pedestrian_speed")?,
        });
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra_job: &str, wind: &str, task_limit: &str) -> String {
        format!(
            r#"{{
              "version": 1,
              "ground_station": [0, 0, 1],
              "elements": [
                {{"id": "slab", "kind": "slab", "shape": {{"box": {{"min": [10, -5, 9], "max": [20, 5, 10]}}}}}}
              ],
              "tasks": [
                {{"id": 1, "reference_points": [[8, -4, 9.5], [8, 4, 9.5]],
                  "recommended_distance": [1, 2] {task_limit}}}
              ],
              "wind": {wind},
              "job": {{ {extra_job} }}
            }}"#
        )
    }

    #[test]
    fn gentle_wind_applies_three_newtons() {
        let s = load_scenario(&minimal("", r#"{"level": "gentle", "direction": [0, 2, 0]}"#, "")).unwrap();
        assert_eq!(s.wind.force_newtons, 3.0);
        assert_eq!(s.wind.direction, Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn mph_speed_limit_is_converted() {
        let s = load_scenario(&minimal("", r#"{"level": "none"}"#, r#", "speed_limit": "10 mph""#)).unwrap();
        // 10 × 0.44704 by hand
        assert!((s.tasks[0].speed_limit - 4.4704).abs() < 1e-12);
        assert!((s.job.v_max - 13.4112).abs() < 1e-12);
        assert_eq!(s.tasks[0].corridor_threshold, 2.0);
    }

    #[test]
    fn bare_numbers_follow_declared_unit() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&minimal("", r#"{"level": "none"}"#, r#", "speed_limit": 10"#)).unwrap();
        doc["units"] = serde_json::json!({"length": "m", "speed": "mph"});
        let s = load_scenario(&doc.to_string()).unwrap();
        assert!((s.tasks[0].speed_limit - 4.4704).abs() < 1e-12);
    }

    #[test]
    fn zero_tasks_is_a_validation_error() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&minimal("", r#"{"level": "none"}"#, "")).unwrap();
        doc["tasks"] = serde_json::json!([]);
        let err = load_scenario(&doc.to_string()).unwrap_err();
        assert_eq!(err.invariant(), Some("task_count_positive"));
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        let err = load_scenario("{ \"version\": 1, ").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)));
        let err = load_scenario(&minimal("\"bogus\": 1", r#"{"level": "none"}"#, "")).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)));
    }

    #[test]
    fn tau_order_is_checked() {
        let err = load_scenario(&minimal(r#""tau_min": 1600"#, r#"{"level": "none"}"#, "")).unwrap_err();
        assert_eq!(err.invariant(), Some("tau_ordered"));
    }

    #[test]
    fn ground_station_inside_element_is_rejected() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&minimal("", r#"{"level": "none"}"#, "")).unwrap();
        doc["ground_station"] = serde_json::json!([15, 0, 9.5]);
        let err = load_scenario(&doc.to_string()).unwrap_err();
        assert_eq!(err.invariant(), Some("ground_station_outside_elements"));
    }

    #[test]
    fn loading_is_pure() {
        let text = minimal("", r#"{"level": "medium", "direction": [1, 1, 0]}"#, "");
        assert_eq!(load_scenario(&text).unwrap(), load_scenario(&text).unwrap());
    }
}
