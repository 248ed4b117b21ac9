//! Reference scenarios shared by tests, examples and the CLI.

use crate::scenario::{load_scenario, ScenarioSpec};

const TINY: &str = r#"{
  "version": 1,
  "name": "tiny",
  "ground_station": [0, 0, 1],
  "elements": [
    {"id": "slab", "kind": "slab", "shape": {"box": {"min": [10, -5, 9], "max": [20, 5, 10]}}}
  ],
  "tasks": [
    {"id": 1, "name": "underside", "reference_points": [[8, -4, 9.5], [8, 4, 9.5]],
     "recommended_distance": [1, 2]}
  ]
}"#;

/// The built-in two-bridge job site with four inspection tasks.
pub const TWO_BRIDGES: &str = include_str!("../fixtures/two_bridges.json");

/// Scripted route that flies all four tasks of [`TWO_BRIDGES`] and lands.
pub const PERFECT_ROUTE: &str = include_str!("../fixtures/perfect_route.json");

/// Flat ground crossed by a road with one slow vehicle.
pub const ROAD_CROSSING: &str = include_str!("../fixtures/road_crossing.json");

/// Timeline pilot that lifts off and flies straight into the vehicle of
/// [`ROAD_CROSSING`].
pub const CRASH_PILOT: &str = include_str!("../fixtures/crash_pilot.json");

/// One slab, one straight task, default job parameters.
pub fn tiny_scenario() -> ScenarioSpec {
    load_scenario(TINY).expect("built-in scenario is valid")
}

pub fn two_bridges() -> ScenarioSpec {
    load_scenario(TWO_BRIDGES).expect("built-in scenario is valid")
}

pub fn road_crossing() -> ScenarioSpec {
    load_scenario(ROAD_CROSSING).expect("built-in scenario is valid")
}
