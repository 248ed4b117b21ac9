use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{invalid, DefectKind, DefectPlan, DefectSpec, ScenarioSpec};
use crate::error::ScenarioError;
use crate::geometry::Vec3;

const DEFECT_STREAM: u64 = 1;

/// Place `plan.count` defects uniformly (by area) over the host surfaces.
///
/// Deterministic in `seed`. Fails when the hosts cannot fit the requested
/// count at the plan's minimum spacing.
pub fn place_defects(
    spec: &ScenarioSpec,
    plan: &DefectPlan,
    seed: u64,
) -> Result<Vec<DefectSpec>, ScenarioError> {
    if plan.count == 0 {
        return Ok(Vec::new());
    }
    let hosts: Vec<_> = if plan.hosts.is_empty() {
        spec.elements.iter().filter(|e| e.kind.hosts_defects()).collect()
    } else {
        plan.hosts
            .iter()
            .map(|id| {
                let e = spec.element(id).ok_or_else(|| {
                    invalid("defect_host_exists", format!("placement host `{id}` is unknown"))
                })?;
                if !e.kind.hosts_defects() {
                    return Err(invalid(
                        "defect_host_structural",
                        format!("`{id}` ({}) cannot host defects", e.kind.as_str()),
                    ));
                }
                Ok(e)
            })
            .collect::<Result<_, _>>()?
    };
    let areas: Vec<f64> = hosts.iter().map(|e| e.shape.surface_area()).collect();
    let total: f64 = areas.iter().sum();
    if hosts.is_empty() || !(total > 0.0) {
        return Err(ScenarioError::InsufficientSurface {
            requested: plan.count,
            placed: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DEFECT_STREAM);
    let kinds = [DefectKind::Crack, DefectKind::Spalling, DefectKind::Corrosion];
    let mut placed: Vec<DefectSpec> = Vec::with_capacity(plan.count);
    let max_attempts = 1000 + 200 * plan.count;
    let mut attempts = 0;
    while placed.len() < plan.count {
        if attempts == max_attempts {
            return Err(ScenarioError::InsufficientSurface {
                requested: plan.count,
                placed: placed.len(),
            });
        }
        attempts += 1;
        let mut pick = rng.random::<f64>() * total;
        let mut host = hosts.len() - 1;
        for (k, a) in areas.iter().enumerate() {
            if pick < *a {
                host = k;
                break;
            }
            pick -= a;
        }
        let position = hosts[host].shape.sample_surface(&mut rng);
        let kind = kinds[rng.random_range(0..kinds.len())];
        let spaced = placed
            .iter()
            .all(|d| (d.position - position).norm() >= plan.min_spacing);
        if spaced {
            placed.push(DefectSpec {
                id: format!("defect-{}", placed.len() + 1),
                position,
                host_element: hosts[host].id.clone(),
                kind,
            });
        }
    }
    Ok(placed)
}

/// Element closest to `point` and its distance; ties go to the
/// lexicographically smaller id. `None` when the scenario has no elements.
pub fn nearest_element(spec: &ScenarioSpec, point: &Vec3) -> Option<(String, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for e in &spec.elements {
        let d = e.shape.distance(point);
        best = match best {
            Some((id, bd)) if bd < d || (bd == d && id <= e.id.as_str()) => Some((id, bd)),
            _ => Some((e.id.as_str(), d)),
        };
    }
    best.map(|(id, d)| (id.to_string(), d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::scenario::{BridgeElement, ElementKind};

    fn spec_with(elements: Vec<BridgeElement>) -> ScenarioSpec {
        let mut s = crate::testing::tiny_scenario();
        s.elements = elements;
        s
    }

    fn el(id: &str, kind: ElementKind, shape: Shape) -> BridgeElement {
        BridgeElement {
            id: id.into(),
            kind,
            shape,
            crashable: true,
        }
    }

    #[test]
    fn zero_count_places_nothing() {
        let s = spec_with(vec![el("s", ElementKind::Slab, Shape::aabb([0.0; 3], [1.0; 3]))]);
        let plan = DefectPlan { count: 0, hosts: vec![], min_spacing: 0.5 };
        assert!(place_defects(&s, &plan, 1).unwrap().is_empty());
    }

    #[test]
    fn placement_is_deterministic_and_on_surface() {
        let s = spec_with(vec![
            el("slab-a", ElementKind::Slab, Shape::aabb([0.0, 0.0, 9.0], [40.0, 10.0, 10.0])),
            el("slab-b", ElementKind::Slab, Shape::aabb([50.0, 0.0, 9.0], [60.0, 10.0, 10.0])),
            el("lake", ElementKind::Water, Shape::aabb([-100.0, -100.0, -5.0], [100.0, 100.0, 0.0])),
        ]);
        let plan = DefectPlan { count: 5, hosts: vec![], min_spacing: 0.5 };
        let a = place_defects(&s, &plan, 42).unwrap();
        let b = place_defects(&s, &plan, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        for d in &a {
            assert!(d.host_element.starts_with("slab"));
            let host = s.element(&d.host_element).unwrap();
            // independent check: distance to the nearest of the six face planes
            let Shape::Box { min, max } = &host.shape else { unreachable!() };
            let p = d.position;
            let face_gap = [p.x - min.x, max.x - p.x, p.y - min.y, max.y - p.y, p.z - min.z, max.z - p.z]
                .into_iter()
                .map(f64::abs)
                .fold(f64::INFINITY, f64::min);
            assert!(face_gap <= 0.05, "{d:?}");
        }
        assert_ne!(a, place_defects(&s, &plan, 43).unwrap());
    }

    #[test]
    fn terrain_host_is_refused() {
        let s = spec_with(vec![el("ground", ElementKind::Terrain, Shape::aabb([0.0; 3], [1.0; 3]))]);
        let plan = DefectPlan { count: 1, hosts: vec!["ground".into()], min_spacing: 0.5 };
        assert_eq!(place_defects(&s, &plan, 1).unwrap_err().invariant(), Some("defect_host_structural"));
    }

    #[test]
    fn crowded_surface_reports_insufficient_area() {
        let s = spec_with(vec![el("tiny", ElementKind::Pier, Shape::aabb([0.0; 3], [0.1; 3]))]);
        let plan = DefectPlan { count: 20, hosts: vec![], min_spacing: 0.5 };
        assert!(matches!(
            place_defects(&s, &plan, 9),
            Err(ScenarioError::InsufficientSurface { requested: 20, .. })
        ));
    }

    #[test]
    fn nearest_element_on_surface_and_ties() {
        let s = spec_with(vec![
            el("b", ElementKind::Pier, Shape::aabb([2.0, -1.0, -1.0], [3.0, 1.0, 1.0])),
            el("a", ElementKind::Pier, Shape::aabb([-3.0, -1.0, -1.0], [-2.0, 1.0, 1.0])),
        ]);
        assert_eq!(nearest_element(&s, &Vec3::new(2.0, 0.0, 0.0)), Some(("b".into(), 0.0)));
        assert_eq!(nearest_element(&s, &Vec3::zeros()), Some(("a".into(), 2.0)));
        assert_eq!(nearest_element(&spec_with(vec![]), &Vec3::zeros()), None);
    }
}
