use super::DroneState;
use crate::scenario::JobSpec;

/// Battery percentage after `elapsed` seconds of flight: linear drain from
/// full capacity to zero over the maximum flight time.
pub fn battery_level(elapsed: f64, job: &JobSpec) -> f64 {
    (job.battery_capacity * (1.0 - elapsed / job.tau_max)).max(0.0)
}

/// Advance the flight clock by `dt` and recompute the battery level from it.
pub fn drain_battery(state: &DroneState, dt: f64, job: &JobSpec) -> DroneState {
    let flight_time = state.flight_time + dt;
    DroneState {
        flight_time,
        battery: battery_level(flight_time, job),
        ..state.clone()
    }
}

impl DroneState {
    /// True once the flight has outlasted the battery's rated endurance.
    pub fn flight_time_exceeded(&self, job: &JobSpec) -> bool {
        self.flight_time >= job.tau_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn linear_drain_hits_half_and_zero() {
        let job = crate::testing::tiny_scenario().job;
        assert_eq!(battery_level(750.0, &job), 50.0);
        assert_eq!(battery_level(1500.0, &job), 0.0);
        assert_eq!(battery_level(2000.0, &job), 0.0);
        assert_eq!(battery_level(0.0, &job), 100.0);
    }

    #[test]
    fn draining_for_the_full_endurance_raises_the_limit() {
        let job = crate::testing::tiny_scenario().job;
        let s = DroneState::at_rest(Vec3::zeros(), 100.0);
        let s = drain_battery(&s, 1500.0, &job);
        assert_eq!(s.battery, 0.0);
        assert!(s.flight_time_exceeded(&job));
        let half = drain_battery(&DroneState::at_rest(Vec3::zeros(), 100.0), 750.0, &job);
        assert!(!half.flight_time_exceeded(&job));
    }
}
