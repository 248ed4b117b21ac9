//! Geometry kernel: convex primitives, point distances and surface sampling.
//!
//! Coordinates are meters in an east-north-up frame (`z` is up). Solid
//! primitives report distance 0 for points inside them; use
//! [`Shape::surface_distance`] when the distance to the boundary is wanted.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

/// Closest point to `p` on the closed segment `[a, b]`.
pub fn closest_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.dot(&ab);
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

fn triangle_area(t: &[Vec3; 3]) -> f64 {
    (t[1] - t[0]).cross(&(t[2] - t[0])).norm() * 0.5
}

/// A convex primitive (or an open triangle patch) in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Axis-aligned box.
    Box { min: Vec3, max: Vec3 },
    /// Vertical cylinder standing on `base` (center of the bottom cap).
    Cylinder { base: Vec3, radius: f64, height: f64 },
    /// Open triangle-mesh patch; a surface without interior.
    Mesh { triangles: Vec<[Vec3; 3]> },
}

impl Shape {
    pub fn aabb(min: [f64; 3], max: [f64; 3]) -> Self {
        Shape::Box {
            min: Vec3::from(min),
            max: Vec3::from(max),
        }
    }

    pub fn cylinder(base: [f64; 3], radius: f64, height: f64) -> Self {
        Shape::Cylinder {
            base: Vec3::from(base),
            radius,
            height,
        }
    }

    /// Enclosed volume. Mesh patches have none.
    pub fn volume(&self) -> f64 {
        match self {
            Shape::Box { min, max } => {
                let e = max - min;
                e.x.max(0.0) * e.y.max(0.0) * e.z.max(0.0)
            }
            Shape::Cylinder { radius, height, .. } => {
                std::f64::consts::PI * radius * radius * height.max(0.0)
            }
            Shape::Mesh { .. } => 0.0,
        }
    }

    pub fn surface_area(&self) -> f64 {
        match self {
            Shape::Box { min, max } => {
                let e = max - min;
                2.0 * (e.x * e.y + e.y * e.z + e.x * e.z)
            }
            Shape::Cylinder { radius, height, .. } => {
                let pi = std::f64::consts::PI;
                2.0 * pi * radius * height + 2.0 * pi * radius * radius
            }
            Shape::Mesh { triangles } => triangles.iter().map(triangle_area).sum(),
        }
    }

    /// Euclidean distance from `p` to the solid (0 inside).
    pub fn distance(&self, p: &Vec3) -> f64 {
        match self {
            Shape::Box { min, max } => {
                let dx = (min.x - p.x).max(0.0).max(p.x - max.x);
                let dy = (min.y - p.y).max(0.0).max(p.y - max.y);
                let dz = (min.z - p.z).max(0.0).max(p.z - max.z);
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
            Shape::Cylinder {
                base,
                radius,
                height,
            } => {
                let rx = p.x - base.x;
                let ry = p.y - base.y;
                let radial = (rx * rx + ry * ry).sqrt();
                let dr = (radial - radius).max(0.0);
                let dz = (base.z - p.z).max(0.0).max(p.z - (base.z + height));
                (dr * dr + dz * dz).sqrt()
            }
            Shape::Mesh { triangles } => triangles
                .iter()
                .map(|t| (p - closest_on_triangle(p, &t[0], &t[1], &t[2])).norm())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Distance from `p` to the boundary surface, also for interior points.
    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        match self {
            Shape::Box { min, max } => {
                let outside = self.distance(p);
                if outside > 0.0 {
                    return outside;
                }
                [
                    p.x - min.x,
                    max.x - p.x,
                    p.y - min.y,
                    max.y - p.y,
                    p.z - min.z,
                    max.z - p.z,
                ]
                .into_iter()
                .fold(f64::INFINITY, f64::min)
            }
            Shape::Cylinder {
                base,
                radius,
                height,
            } => {
                let outside = self.distance(p);
                if outside > 0.0 {
                    return outside;
                }
                let radial = ((p.x - base.x).powi(2) + (p.y - base.y).powi(2)).sqrt();
                (radius - radial)
                    .min(p.z - base.z)
                    .min(base.z + height - p.z)
            }
            Shape::Mesh { .. } => self.distance(p),
        }
    }

    /// Uniform sample over the boundary surface, by area.
    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        match self {
            Shape::Box { min, max } => {
                let e = max - min;
                // faces: (fixed axis, at max?) with areas
                let faces = [
                    (0usize, e.y * e.z),
                    (1, e.x * e.z),
                    (2, e.x * e.y),
                ];
                let total: f64 = faces.iter().map(|f| 2.0 * f.1).sum();
                let mut pick = rng.random::<f64>() * total;
                let mut chosen = (2usize, false);
                'outer: for (axis, area) in faces {
                    for high in [false, true] {
                        if pick < area {
                            chosen = (axis, high);
                            break 'outer;
                        }
                        pick -= area;
                    }
                }
                let mut q = Vec3::new(
                    min.x + rng.random::<f64>() * e.x,
                    min.y + rng.random::<f64>() * e.y,
                    min.z + rng.random::<f64>() * e.z,
                );
                q[chosen.0] = if chosen.1 { max[chosen.0] } else { min[chosen.0] };
                q
            }
            Shape::Cylinder {
                base,
                radius,
                height,
            } => {
                let pi = std::f64::consts::PI;
                let side = 2.0 * pi * radius * height;
                let cap = pi * radius * radius;
                let pick = rng.random::<f64>() * (side + 2.0 * cap);
                let theta = rng.random::<f64>() * 2.0 * pi;
                if pick < side {
                    let z = base.z + rng.random::<f64>() * height;
                    Vec3::new(
                        base.x + radius * theta.cos(),
                        base.y + radius * theta.sin(),
                        z,
                    )
                } else {
                    let r = radius * rng.random::<f64>().sqrt();
                    let z = if pick < side + cap {
                        base.z
                    } else {
                        base.z + height
                    };
                    Vec3::new(base.x + r * theta.cos(), base.y + r * theta.sin(), z)
                }
            }
            Shape::Mesh { triangles } => {
                let total: f64 = triangles.iter().map(triangle_area).sum();
                let mut pick = rng.random::<f64>() * total;
                let mut tri = &triangles[triangles.len() - 1];
                for t in triangles {
                    let a = triangle_area(t);
                    if pick < a {
                        tri = t;
                        break;
                    }
                    pick -= a;
                }
                let r1 = rng.random::<f64>().sqrt();
                let r2 = rng.random::<f64>();
                tri[0] * (1.0 - r1) + tri[1] * (r1 * (1.0 - r2)) + tri[2] * (r1 * r2)
            }
        }
    }

    /// Shape-specific validity: positive extents, finite coordinates,
    /// non-degenerate triangles.
    pub fn check(&self) -> Result<(), &'static str> {
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        match self {
            Shape::Box { min, max } => {
                if !finite(min) || !finite(max) {
                    return Err("box corners must be finite");
                }
                if self.volume() <= 0.0 {
                    return Err("box volume must be positive");
                }
            }
            Shape::Cylinder {
                base,
                radius,
                height,
            } => {
                if !finite(base) || !radius.is_finite() || !height.is_finite() {
                    return Err("cylinder parameters must be finite");
                }
                if *radius <= 0.0 || *height <= 0.0 {
                    return Err("cylinder volume must be positive");
                }
            }
            Shape::Mesh { triangles } => {
                if triangles.is_empty() {
                    return Err("mesh patch needs at least one triangle");
                }
                if triangles.iter().any(|t| !t.iter().all(finite)) {
                    return Err("mesh vertices must be finite");
                }
                if triangles.iter().any(|t| triangle_area(t) <= 0.0) {
                    return Err("mesh triangles must have positive area");
                }
            }
        }
        Ok(())
    }
}

/// Arc-length parameterized polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec3>,
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Vec3>) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (k, p) in points.iter().enumerate() {
            if k > 0 {
                acc += (p - points[k - 1]).norm();
            }
            cumulative.push(acc);
        }
        Self { points, cumulative }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Point at arc length `s` (clamped to the ends) and the index of the
    /// segment containing it.
    pub fn point_at(&self, s: f64) -> (Vec3, usize) {
        if self.points.len() < 2 {
            return (self.points.first().copied().unwrap_or_else(Vec3::zeros), 0);
        }
        let s = s.clamp(0.0, self.length());
        let last_seg = self.points.len() - 2;
        let seg = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(k) => k.min(last_seg),
            Err(k) => k.saturating_sub(1).min(last_seg),
        };
        let a = self.points[seg];
        let b = self.points[seg + 1];
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        if len == 0.0 {
            return (a, seg);
        }
        let t = (s - self.cumulative[seg]) / len;
        (a + (b - a) * t, seg)
    }

    /// Unit direction of segment `seg`.
    pub fn direction(&self, seg: usize) -> Vec3 {
        let d = self.points[seg + 1] - self.points[seg];
        let n = d.norm();
        if n == 0.0 {
            Vec3::x()
        } else {
            d / n
        }
    }

    /// Global minimum distance over every segment.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.points
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closest point over every segment, with its arc-length coordinate.
    pub fn project(&self, p: &Vec3) -> (Vec3, f64) {
        let mut best = (self.points[0], 0.0, f64::INFINITY);
        for (k, w) in self.points.windows(2).enumerate() {
            let q = closest_on_segment(p, &w[0], &w[1]);
            let d = (p - q).norm();
            if d < best.2 {
                best = (q, self.cumulative[k] + (q - w[0]).norm(), d);
            }
        }
        (best.0, best.1)
    }
}
