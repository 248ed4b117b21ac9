use serde::{Deserialize, Serialize};

use crate::geometry::{point_segment_distance, Vec3};
use crate::scenario::TaskSpec;

/// Result of the on-path test for one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnPath {
    pub on_path: bool,
    pub l_star: f64,
}

/// On-path analysis for a single task at one drone position.
///
/// Finds the reference point nearest to `p` (ties go to the lower index),
/// then measures the distance to the one or two segments meeting at that
/// point. Only those segments are searched, so on folded paths `l_star`
/// can exceed the global polyline distance.
pub fn on_path(task: &TaskSpec, p: &Vec3) -> OnPath {
    let pts = &task.reference_points;
    let mut n_star = 0;
    let mut best = f64::INFINITY;
    for (n, q) in pts.iter().enumerate() {
        let d = (p - q).norm();
        if d < best {
            best = d;
            n_star = n;
        }
    }
    let mut l_star = f64::INFINITY;
    if n_star > 0 {
        l_star = l_star.min(point_segment_distance(p, &pts[n_star - 1], &pts[n_star]));
    }
    if n_star + 1 < pts.len() {
        l_star = l_star.min(point_segment_distance(p, &pts[n_star], &pts[n_star + 1]));
    }
    OnPath {
        on_path: l_star <= task.corridor_threshold,
        l_star,
    }
}

/// Task assignment for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Task the drone is on, with its `l_star`.
    pub assigned: Option<(u32, f64)>,
    /// Task with the smallest `l_star` overall, whether on path or not.
    pub nearest: Option<(u32, f64)>,
}

impl Assignment {
    pub fn task(&self) -> Option<u32> {
        self.assigned.map(|(t, _)| t)
    }

    /// `l_star` of the assigned task, else of the nearest one.
    pub fn l_star(&self) -> Option<f64> {
        self.assigned.or(self.nearest).map(|(_, l)| l)
    }
}

fn better(candidate: (u32, f64), current: Option<(u32, f64)>) -> bool {
    match current {
        None => true,
        Some((t, l)) => candidate.1 < l || (candidate.1 == l && candidate.0 < t),
    }
}

/// Assign the drone to at most one task: among tasks whose corridor
/// contains `p`, the one with the smallest `l_star`, ties to the lower id.
pub fn assign_task(tasks: &[TaskSpec], p: &Vec3) -> Assignment {
    let mut assigned = None;
    let mut nearest = None;
    for task in tasks {
        let r = on_path(task, p);
        let c = (task.id, r.l_star);
        if better(c, nearest) {
            nearest = Some(c);
        }
        if r.on_path && better(c, assigned) {
            assigned = Some(c);
        }
    }
    Assignment { assigned, nearest }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: u32, pts: &[[f64; 3]], corridor: f64) -> TaskSpec {
        TaskSpec {
            id,
            name: String::new(),
            reference_points: pts.iter().map(|p| Vec3::from(*p)).collect(),
            corridor_threshold: corridor,
            recommended_distance: [1.0, 2.0],
            speed_limit: 4.4704,
            light_required: false,
        }
    }

    #[test]
    fn reference_point_has_zero_distance() {
        let t = task(1, &[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [10.0, 10.0, 0.0]], 2.0);
        let r = on_path(&t, &Vec3::new(10.0, 0.0, 0.0));
        assert_eq!(r.l_star, 0.0);
        assert!(r.on_path);
    }

    #[test]
    fn just_outside_the_corridor_at_the_midpoint() {
        let t = task(1, &[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]], 2.0);
        let r = on_path(&t, &Vec3::new(5.0, 2.001, 0.0));
        assert!(!r.on_path);
        assert!((r.l_star - 2.001).abs() < 1e-12);
        assert!(on_path(&t, &Vec3::new(5.0, 0.0, 2.0)).on_path);
    }

    #[test]
    fn nearest_vertex_tie_uses_lower_index() {
        // equidistant from vertices 0 and 3; vertex 0 wins, so segment 2-3
        // (which passes closer, at ~1.386 m) is not searched
        let t = task(1, &[[0.0, 0.0, 0.0], [0.0, 4.0, 0.0], [-1.0, 2.0, 0.0], [2.0, 0.0, 0.0]], 2.0);
        let p = Vec3::new(1.0, -1.0, 0.0);
        let r = on_path(&t, &p);
        assert!((r.l_star - 2f64.sqrt()).abs() < 1e-12);
        assert!(point_segment_distance(&p, &Vec3::new(-1.0, 2.0, 0.0), &Vec3::new(2.0, 0.0, 0.0)) < 1.39);
    }

    #[test]
    fn folded_path_overestimates_by_design() {
        // the nearest vertex is the returning leg's end; the outbound leg
        // 0.5 m away is not adjacent to it
        let t = task(1, &[[0.0, 0.0, 0.0], [100.0, 0.0, 0.0], [100.0, 3.0, 0.0], [50.0, 3.0, 0.0]], 2.0);
        let p = Vec3::new(60.0, 0.5, 0.0);
        let r = on_path(&t, &p);
        assert!((r.l_star - 2.5).abs() < 1e-12);
        assert!(!r.on_path);
        assert_eq!(crate::geometry::Polyline::new(t.reference_points.clone()).distance(&p), 0.5);
    }

    #[test]
    fn assignment_rules() {
        let t1 = task(1, &[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]], 2.0);
        let t2 = task(2, &[[0.0, 50.0, 0.0], [10.0, 50.0, 0.0]], 2.0);
        let t3 = task(3, &[[0.0, 1.5, 0.0], [10.0, 1.5, 0.0]], 2.0);
        let tasks = vec![t1, t2, t3];
        let far = assign_task(&tasks, &Vec3::new(5.0, 25.0, 40.0));
        assert_eq!(far.task(), None);
        assert!(far.nearest.is_some());
        assert_eq!(assign_task(&tasks, &Vec3::new(5.0, 51.0, 0.0)).task(), Some(2));
        // l*_1 = 0.5 < l*_3 = 1.0
        let both = assign_task(&tasks, &Vec3::new(5.0, 0.5, 0.0));
        assert_eq!(both.assigned, Some((1, 0.5)));
        // equidistant: lower id wins
        let tie = assign_task(&tasks, &Vec3::new(5.0, 0.75, 0.0));
        assert_eq!(tie.task(), Some(1));
    }
}
