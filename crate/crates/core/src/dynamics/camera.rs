use super::DroneState;
use crate::geometry::Vec3;
use crate::scenario::JobSpec;

/// Whether a point lies inside the camera frustum: in front of the drone,
/// within half the horizontal and vertical field of view of the heading,
/// and no farther than the snapshot range. The camera looks along the yaw
/// with zero pitch; occlusion is not modelled.
pub fn camera_sees(state: &DroneState, target: &Vec3, job: &JobSpec) -> bool {
    let d = target - state.position;
    if d.norm() > job.snapshot_range {
        return false;
    }
    let forward = d.dot(&state.forward());
    if forward <= 0.0 {
        return false;
    }
    let lateral = d.dot(&state.right());
    let [hfov, vfov] = job.camera_fov;
    lateral.abs().atan2(forward) <= (hfov / 2.0).to_radians()
        && d.z.abs().atan2(forward) <= (vfov / 2.0).to_radians()
}
