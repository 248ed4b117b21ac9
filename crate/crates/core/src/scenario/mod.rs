//! Static world description: bridge elements, inspection tasks, defects,
//! wind, traffic and the job parameters every other module reads.
//!
//! A [`ScenarioSpec`] is immutable once loaded. Values are SI throughout
//! (meters, seconds, m/s); the config document may carry mph.

mod config;
mod defects;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::geometry::{Shape, Vec3};

pub use config::{load_scenario, load_scenario_file, MPH_TO_MPS};
pub use defects::{nearest_element, place_defects};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Slab,
    Arch,
    Pier,
    Interlayer,
    Deck,
    Terrain,
    Water,
}

impl ElementKind {
    /// Structural kinds that can host surface defects.
    pub fn hosts_defects(self) -> bool {
        !matches!(self, ElementKind::Terrain | ElementKind::Water)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Slab => "slab",
            ElementKind::Arch => "arch",
            ElementKind::Pier => "pier",
            ElementKind::Interlayer => "interlayer",
            ElementKind::Deck => "deck",
            ElementKind::Terrain => "terrain",
            ElementKind::Water => "water",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeElement {
    pub id: String,
    pub kind: ElementKind,
    pub shape: Shape,
    pub crashable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// 1-based task index.
    pub id: u32,
    #[serde(default)]
    pub name: String,
    pub reference_points: Vec<Vec3>,
    /// Corridor half-width used by the on-path test, meters.
    pub corridor_threshold: f64,
    /// Recommended stand-off from the inspected element, `[min, max]` meters.
    pub recommended_distance: [f64; 2],
    /// Speed limit while performing the task, m/s.
    pub speed_limit: f64,
    pub light_required: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    Crack,
    Spalling,
    Corrosion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectSpec {
    pub id: String,
    pub position: Vec3,
    pub host_element: String,
    pub kind: DefectKind,
}

/// Maximum distance between a defect and its host surface.
pub const DEFECT_SURFACE_TOLERANCE: f64 = 0.05;

/// Random placement request; resolved into concrete defects per session seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectPlan {
    pub count: usize,
    /// Host element ids; empty means every defect-capable element.
    #[serde(default)]
    pub hosts: Vec<String>,
    /// Minimum spacing between two placed defects, meters.
    #[serde(default = "DefectPlan::default_spacing")]
    pub min_spacing: f64,
}

impl DefectPlan {
    fn default_spacing() -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindLevel {
    None,
    Light,
    Gentle,
    Medium,
}

impl WindLevel {
    /// Force applied to the drone at each level, newtons.
    pub fn force_newtons(self) -> f64 {
        match self {
            WindLevel::None => 0.0,
            WindLevel::Light => 0.12,
            WindLevel::Gentle => 3.0,
            WindLevel::Medium => 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindSpec {
    pub level: WindLevel,
    pub direction: Vec3,
    pub force_newtons: f64,
}

impl WindSpec {
    pub fn calm() -> Self {
        Self::new(WindLevel::None, Vec3::x())
    }

    pub fn new(level: WindLevel, direction: Vec3) -> Self {
        Self {
            level,
            direction,
            force_newtons: level.force_newtons(),
        }
    }

    /// Force vector in newtons.
    pub fn force(&self) -> Vec3 {
        if self.level == WindLevel::None {
            Vec3::zeros()
        } else {
            self.direction * self.force_newtons
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneKind {
    Road,
    Sidewalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub kind: LaneKind,
    pub points: Vec<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vehicle,
    Human,
}

/// One traffic agent's starting condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    pub kind: AgentKind,
    /// Index into [`TrafficSpec::lanes`].
    pub lane: usize,
    /// Initial arc-length offset along the lane, meters.
    pub offset: f64,
    /// Constant travel speed, m/s.
    pub speed: f64,
}

/// Seeded generation request for traffic agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficPlan {
    pub vehicles: usize,
    pub pedestrians: usize,
    pub vehicle_speed: [f64; 2],
    pub pedestrian_speed: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub lanes: Vec<Lane>,
    pub agents: Vec<AgentSpec>,
    pub plan: Option<TrafficPlan>,
    /// Vehicle collision box half extents (length, width, height), meters.
    pub vehicle_half_extents: Vec3,
    pub pedestrian_radius: f64,
    pub pedestrian_height: f64,
}

impl TrafficSpec {
    pub fn empty() -> Self {
        Self {
            lanes: Vec::new(),
            agents: Vec::new(),
            plan: None,
            vehicle_half_extents: Vec3::new(2.2, 0.9, 0.75),
            pedestrian_radius: 0.3,
            pedestrian_height: 1.8,
        }
    }

    pub fn count(&self) -> usize {
        self.agents.len()
    }
}

/// Scoring coefficients of the post-session assessment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringWeights {
    /// Gain per unit on-path fraction.
    pub on_path: f64,
    /// Loss per unit of speed-weighted speeding fraction.
    pub speeding: f64,
    /// Efficiency score when finishing by the cut-off time.
    pub efficiency_base: f64,
    /// Efficiency slope per second past the cut-off.
    pub efficiency_slope: f64,
    /// Efficiency score when the battery runs out.
    pub battery_failure: f64,
    pub crash_human: f64,
    pub crash_vehicle: f64,
    pub crash_other: f64,
    pub accuracy: f64,
    /// Floor of the safety score.
    pub safety_floor: f64,
    /// Recall importance relative to precision.
    pub beta: f64,
}

impl ScoringWeights {
    /// Weights derived for `task_count` tasks so that conformity and
    /// efficiency stay within [-100, 100].
    ///
    /// For four tasks at a 10 mph limit and a 30 mph drone this gives
    /// `on_path = 25` and `speeding = -25/3`.
    pub fn derived(task_count: usize, v_max: f64, speed_limit: f64, tau_min: f64, tau_max: f64) -> Self {
        let t = task_count as f64;
        let efficiency_base = 100.0;
        Self {
            on_path: 100.0 / t,
            speeding: -100.0 * speed_limit / (t * v_max),
            efficiency_base,
            efficiency_slope: -efficiency_base / (tau_max - tau_min),
            battery_failure: -100.0,
            crash_human: -100.0,
            crash_vehicle: -100.0,
            crash_other: -3.0,
            accuracy: 100.0,
            safety_floor: -100.0,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    /// Cut-off time for the full efficiency score, seconds.
    pub tau_min: f64,
    /// Maximum allowable flight time, seconds; the battery is empty here.
    pub tau_max: f64,
    /// Frame rate, Hz.
    pub frame_rate: f64,
    /// Maximum drone speed, m/s.
    pub v_max: f64,
    pub weights: ScoringWeights,
    /// Percent.
    pub battery_capacity: f64,
    /// Meters.
    pub snapshot_range: f64,
    /// Horizontal and vertical field of view, degrees.
    pub camera_fov: [f64; 2],
}

impl JobSpec {
    pub fn dt(&self) -> f64 {
        1.0 / self.frame_rate
    }
}

/// Physical parameters of the simulated drone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneParams {
    /// kg
    pub mass: f64,
    /// m/s at full forward/backward stick.
    pub max_forward_speed: f64,
    /// m/s at full sideward stick.
    pub max_sideward_speed: f64,
    /// m/s at full up/down stick.
    pub max_vertical_speed: f64,
    /// rad/s at full rotation stick.
    pub rotation_rate: f64,
    /// Time constant of the first-order velocity relaxation, seconds.
    pub slow_down_time: f64,
    /// Contact sphere radius, meters.
    pub radius: f64,
}

impl Default for DroneParams {
    fn default() -> Self {
        Self {
            mass: 1.2,
            max_forward_speed: 30.0 * MPH_TO_MPS,
            max_sideward_speed: 30.0 * MPH_TO_MPS,
            max_vertical_speed: 5.0,
            rotation_rate: std::f64::consts::FRAC_PI_2,
            slow_down_time: 0.5,
            radius: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub elements: Vec<BridgeElement>,
    pub tasks: Vec<TaskSpec>,
    pub defects: Vec<DefectSpec>,
    pub defect_plan: Option<DefectPlan>,
    pub wind: WindSpec,
    pub traffic: TrafficSpec,
    pub ground_station: Vec3,
    pub job: JobSpec,
    pub drone: DroneParams,
    pub seed: u64,
}

fn invalid(invariant: &'static str, detail: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        invariant,
        detail: detail.into(),
    }
}

impl ScenarioSpec {
    pub fn element(&self, id: &str) -> Option<&BridgeElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn task(&self, id: u32) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Smallest task speed limit; the reference for the speeding weight.
    pub fn min_speed_limit(&self) -> f64 {
        self.tasks
            .iter()
            .map(|t| t.speed_limit)
            .fold(f64::INFINITY, f64::min)
    }

    /// Re-resolve the seeded parts of the world (random defects, generated
    /// traffic) for a session seed. Explicit defects and agents are kept.
    pub fn reseeded(&self, seed: u64) -> Result<ScenarioSpec, ScenarioError> {
        let mut spec = self.clone();
        spec.seed = seed;
        if let Some(plan) = &spec.defect_plan {
            spec.defects = place_defects(&spec, plan, seed)?;
        }
        if let Some(plan) = &spec.traffic.plan {
            spec.traffic.agents = crate::dynamics::generate_agents(&spec.traffic, plan, seed)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Check every structural invariant; the error names the first
    /// violated one.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.tasks.is_empty() {
            return Err(invalid("task_count_positive", "at least one task is required"));
        }
        let mut ids = BTreeSet::new();
        for e in &self.elements {
            if !ids.insert(e.id.as_str()) {
                return Err(invalid("element_ids_unique", format!("duplicate element id `{}`", e.id)));
            }
            e.shape
                .check()
                .map_err(|m| invalid("element_shape_valid", format!("element `{}`: {m}", e.id)))?;
        }
        for (k, t) in self.tasks.iter().enumerate() {
            if t.id as usize != k + 1 {
                return Err(invalid(
                    "task_ids_sequential",
                    format!("task at position {} has id {}, expected {}", k, t.id, k + 1),
                ));
            }
            if t.reference_points.len() < 2 {
                return Err(invalid(
                    "reference_points_min_two",
                    format!("task {} has {} reference points", t.id, t.reference_points.len()),
                ));
            }
            if t.reference_points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
                return Err(invalid("reference_points_finite", format!("task {}", t.id)));
            }
            if let Some(n) = t.reference_points.windows(2).position(|w| w[0] == w[1]) {
                return Err(invalid(
                    "reference_points_distinct",
                    format!("task {}: points {} and {} coincide", t.id, n, n + 1),
                ));
            }
            if !(t.corridor_threshold > 0.0) {
                return Err(invalid("corridor_threshold_positive", format!("task {}", t.id)));
            }
            let [lo, hi] = t.recommended_distance;
            if !(lo < hi) {
                return Err(invalid(
                    "recommended_distance_ordered",
                    format!("task {}: [{lo}, {hi}]", t.id),
                ));
            }
            if !(t.speed_limit > 0.0) {
                return Err(invalid("speed_limit_positive", format!("task {}", t.id)));
            }
        }
        let j = &self.job;
        if !(j.tau_min > 0.0 && j.tau_min < j.tau_max) {
            return Err(invalid(
                "tau_ordered",
                format!("need 0 < tau_min < tau_max, got {} and {}", j.tau_min, j.tau_max),
            ));
        }
        if !(j.frame_rate > 0.0) {
            return Err(invalid("frame_rate_positive", format!("{}", j.frame_rate)));
        }
        if !(j.v_max > 0.0) {
            return Err(invalid("v_max_positive", format!("{}", j.v_max)));
        }
        if !(j.battery_capacity > 0.0) {
            return Err(invalid("battery_capacity_positive", format!("{}", j.battery_capacity)));
        }
        if !(j.snapshot_range > 0.0) {
            return Err(invalid("snapshot_range_positive", format!("{}", j.snapshot_range)));
        }
        if j.camera_fov.iter().any(|a| !(*a > 0.0 && *a < 180.0)) {
            return Err(invalid("camera_fov_range", format!("{:?}", j.camera_fov)));
        }
        if !(j.weights.beta >= 0.0) {
            return Err(invalid("beta_non_negative", format!("{}", j.weights.beta)));
        }
        if !(j.weights.safety_floor <= 0.0) {
            return Err(invalid("safety_floor_non_positive", format!("{}", j.weights.safety_floor)));
        }
        let d = &self.drone;
        if !(d.mass > 0.0
            && d.max_forward_speed > 0.0
            && d.max_sideward_speed > 0.0
            && d.max_vertical_speed > 0.0
            && d.rotation_rate > 0.0
            && d.slow_down_time >= 0.0
            && d.radius > 0.0)
        {
            return Err(invalid("drone_params_positive", format!("{d:?}")));
        }
        let w = &self.wind;
        if w.force_newtons != w.level.force_newtons() {
            return Err(invalid(
                "wind_force_mapping",
                format!("{:?} must apply {} N, got {}", w.level, w.level.force_newtons(), w.force_newtons),
            ));
        }
        if w.level != WindLevel::None && (w.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid("wind_direction_unit", format!("norm {}", w.direction.norm())));
        }
        for e in &self.elements {
            if e.shape.volume() > 0.0 && e.shape.distance(&self.ground_station) == 0.0 {
                return Err(invalid(
                    "ground_station_outside_elements",
                    format!("ground station lies inside `{}`", e.id),
                ));
            }
        }
        let mut defect_ids = BTreeSet::new();
        for d in &self.defects {
            if !defect_ids.insert(d.id.as_str()) {
                return Err(invalid("defect_ids_unique", format!("duplicate defect id `{}`", d.id)));
            }
            let host = self.element(&d.host_element).ok_or_else(|| {
                invalid(
                    "defect_host_exists",
                    format!("defect `{}` names unknown element `{}`", d.id, d.host_element),
                )
            })?;
            let gap = host.shape.surface_distance(&d.position);
            if gap > DEFECT_SURFACE_TOLERANCE {
                return Err(invalid(
                    "defect_on_host_surface",
                    format!("defect `{}` is {gap:.3} m from `{}`", d.id, host.id),
                ));
            }
        }
        let t = &self.traffic;
        for a in &t.agents {
            let lane = t.lanes.get(a.lane).ok_or_else(|| {
                invalid("agent_lane_exists", format!("agent `{}` uses lane {}", a.id, a.lane))
            })?;
            if lane.points.len() < 2 {
                return Err(invalid("lane_min_two_points", format!("lane `{}`", lane.id)));
            }
            if !(a.speed >= 0.0) {
                return Err(invalid("agent_speed_non_negative", format!("agent `{}`", a.id)));
            }
        }
        Ok(())
    }
}
