//! Planar geometry kernel: SE(2) poses, convex shapes, closed-set collision,
//! containment and swept-segment validity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default interpolation spacing for swept checks, in meters.
pub const DEFAULT_STEP: f64 = 0.05;

const CONVEX_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("disc radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not strictly convex with counter-clockwise winding")]
    NotConvexCcw,
    #[error("non-finite coordinate in shape")]
    NonFinite,
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Signed shortest rotation taking `from` onto `to`.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// A rigid planar transform. Serialized as `[x, y, theta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl From<[f64; 3]> for Pose2 {
    fn from(v: [f64; 3]) -> Self {
        Pose2::new(v[0], v[1], v[2])
    }
}

impl From<Pose2> for [f64; 3] {
    fn from(p: Pose2) -> Self {
        [p.x, p.y, p.theta]
    }
}

/// A robot configuration is the pose of its body frame.
pub type Config = Pose2;

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn translation_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Maps a point from this frame into the parent frame.
    pub fn transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Component-wise closeness, comparing angles on the circle.
    pub fn approx_eq(&self, other: &Pose2, tol: f64) -> bool {
        (self.x - other.x).abs() <= tol
            && (self.y - other.y).abs() <= tol
            && angle_diff(self.theta, other.theta).abs() <= tol
    }
}

/// Group product `a ∘ b`.
pub fn compose(a: Pose2, b: Pose2) -> Pose2 {
    let [x, y] = a.transform_point([b.x, b.y]);
    Pose2::new(x, y, a.theta + b.theta)
}

pub fn inverse(a: Pose2) -> Pose2 {
    let (s, c) = a.theta.sin_cos();
    Pose2::new(-(c * a.x + s * a.y), s * a.x - c * a.y, -a.theta)
}

/// Linear in (x, y), shortest arc in theta; `s` in [0, 1].
pub fn interpolate(from: Pose2, to: Pose2, s: f64) -> Pose2 {
    Pose2::new(
        from.x + (to.x - from.x) * s,
        from.y + (to.y - from.y) * s,
        from.theta + angle_diff(from.theta, to.theta) * s,
    )
}

/// Configuration-space metric: euclidean translation plus weighted rotation.
pub fn config_distance(a: Pose2, b: Pose2, rotation_weight: f64) -> f64 {
    (b.x - a.x).hypot(b.y - a.y) + rotation_weight * angle_diff(a.theta, b.theta).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Disc(f64),
    Poly(Vec<[f64; 2]>),
}

impl Shape {
    pub fn disc(radius: f64) -> Self {
        Shape::Disc(radius)
    }

    /// Axis-aligned rectangle centered on the body origin.
    pub fn rect(width: f64, height: f64) -> Self {
        let (hw, hh) = (width / 2.0, height / 2.0);
        Shape::Poly(vec![[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        match self {
            Shape::Disc(r) => {
                if !r.is_finite() {
                    Err(GeomError::NonFinite)
                } else if *r > 0.0 {
                    Ok(())
                } else {
                    Err(GeomError::BadRadius(*r))
                }
            }
            Shape::Poly(v) => {
                if v.len() < 3 {
                    return Err(GeomError::TooFewVertices(v.len()));
                }
                if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(GeomError::NonFinite);
                }
                let n = v.len();
                let mut turning = 0.0;
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    let c = v[(i + 2) % n];
                    let e1 = [b[0] - a[0], b[1] - a[1]];
                    let e2 = [c[0] - b[0], c[1] - b[1]];
                    if cross(e1, e2) <= CONVEX_EPS {
                        return Err(GeomError::NotConvexCcw);
                    }
                    turning += angle_diff(e1[1].atan2(e1[0]), e2[1].atan2(e2[0]));
                }
                // A star polygon turns more than once around.
                if (turning - 2.0 * PI).abs() > 1e-6 {
                    return Err(GeomError::NotConvexCcw);
                }
                Ok(())
            }
        }
    }

    /// Largest distance from the body origin to any point of the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Disc(r) => *r,
            Shape::Poly(v) => v.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max),
        }
    }

    pub fn place(&self, pose: Pose2) -> Placed {
        Placed::new(self, pose)
    }
}

/// A shape with its world-frame geometry precomputed.
#[derive(Debug, Clone)]
pub struct Placed {
    geom: PlacedGeom,
    center: [f64; 2],
    radius: f64,
}

#[derive(Debug, Clone)]
enum PlacedGeom {
    Disc(f64),
    Poly(Vec<[f64; 2]>),
}

impl Placed {
    pub fn new(shape: &Shape, pose: Pose2) -> Self {
        match shape {
            Shape::Disc(r) => Placed {
                geom: PlacedGeom::Disc(*r),
                center: [pose.x, pose.y],
                radius: *r,
            },
            Shape::Poly(v) => {
                let world: Vec<[f64; 2]> = v.iter().map(|p| pose.transform_point(*p)).collect();
                Placed {
                    geom: PlacedGeom::Poly(world),
                    center: [pose.x, pose.y],
                    radius: shape.bounding_radius(),
                }
            }
        }
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn bounding_radius(&self) -> f64 {
        self.radius
    }

    /// World-frame vertices for polygons, `None` for discs.
    pub fn vertices(&self) -> Option<&[[f64; 2]]> {
        match &self.geom {
            PlacedGeom::Poly(v) => Some(v),
            PlacedGeom::Disc(_) => None,
        }
    }

    /// Closed-set intersection test; touching counts.
    pub fn collides(&self, other: &Placed) -> bool {
        let d = dist(self.center, other.center);
        if d > self.radius + other.radius {
            return false;
        }
        match (&self.geom, &other.geom) {
            (PlacedGeom::Disc(ra), PlacedGeom::Disc(rb)) => d <= ra + rb,
            (PlacedGeom::Disc(r), PlacedGeom::Poly(v)) => disc_poly_collide(self.center, *r, v),
            (PlacedGeom::Poly(v), PlacedGeom::Disc(r)) => disc_poly_collide(other.center, *r, v),
            (PlacedGeom::Poly(a), PlacedGeom::Poly(b)) => sat_overlap(a, b),
        }
    }

    /// Euclidean gap between the shapes, zero when they touch or overlap.
    pub fn gap(&self, other: &Placed) -> f64 {
        if self.collides(other) {
            return 0.0;
        }
        match (&self.geom, &other.geom) {
            (PlacedGeom::Disc(ra), PlacedGeom::Disc(rb)) => {
                dist(self.center, other.center) - ra - rb
            }
            (PlacedGeom::Disc(r), PlacedGeom::Poly(v)) => {
                (point_poly_boundary_distance(self.center, v) - r).max(0.0)
            }
            (PlacedGeom::Poly(v), PlacedGeom::Disc(r)) => {
                (point_poly_boundary_distance(other.center, v) - r).max(0.0)
            }
            (PlacedGeom::Poly(a), PlacedGeom::Poly(b)) => {
                let ab = a
                    .iter()
                    .map(|p| point_poly_boundary_distance(*p, b))
                    .fold(f64::INFINITY, f64::min);
                let ba = b
                    .iter()
                    .map(|p| point_poly_boundary_distance(*p, a))
                    .fold(f64::INFINITY, f64::min);
                ab.min(ba)
            }
        }
    }

    /// Collision with a clearance margin: true when the gap is at most `margin`.
    pub fn near(&self, other: &Placed, margin: f64) -> bool {
        if margin <= 0.0 {
            return self.collides(other);
        }
        if dist(self.center, other.center) > self.radius + other.radius + margin {
            return false;
        }
        self.gap(other) <= margin
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn point_in_convex(p: [f64; 2], v: &[[f64; 2]]) -> bool {
    let n = v.len();
    (0..n).all(|i| {
        let a = v[i];
        let b = v[(i + 1) % n];
        cross([b[0] - a[0], b[1] - a[1]], [p[0] - a[0], p[1] - a[1]]) >= 0.0
    })
}

fn point_poly_boundary_distance(p: [f64; 2], v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| point_segment_distance(p, v[i], v[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn disc_poly_collide(c: [f64; 2], r: f64, v: &[[f64; 2]]) -> bool {
    point_in_convex(c, v) || point_poly_boundary_distance(c, v) <= r
}

fn project(v: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p[0] * axis[0] + p[1] * axis[1];
        (lo.min(d), hi.max(d))
    })
}

/// Separating-axis test over the edge normals of both convex polygons.
fn sat_overlap(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            let axis = [q[1] - p[1], p[0] - q[0]];
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
    }
    true
}

/// True iff the closed shapes intersect (touching counts as collision).
pub fn collide(sa: &Shape, pa: Pose2, sb: &Shape, pb: Pose2) -> bool {
    Placed::new(sa, pa).collides(&Placed::new(sb, pb))
}

/// True iff `s` at `ps` lies entirely inside the convex `region` at `pregion`.
/// Boundary contact counts as inside.
pub fn contains(region: &Shape, pregion: Pose2, s: &Shape, ps: Pose2) -> bool {
    let rv: Vec<[f64; 2]> = match region {
        Shape::Poly(v) => v.iter().map(|p| pregion.transform_point(*p)).collect(),
        // Regions are convex polygons; a disc region is handled directly.
        Shape::Disc(rr) => {
            let d = dist([pregion.x, pregion.y], [ps.x, ps.y]);
            return match s {
                Shape::Disc(r) => d + r <= *rr,
                Shape::Poly(v) => v.iter().all(|p| {
                    dist(ps.transform_point(*p), [pregion.x, pregion.y]) <= *rr
                }),
            };
        }
    };
    let n = rv.len();
    let inward = |p: [f64; 2], i: usize| -> f64 {
        let a = rv[i];
        let b = rv[(i + 1) % n];
        let e = [b[0] - a[0], b[1] - a[1]];
        cross(e, [p[0] - a[0], p[1] - a[1]]) / e[0].hypot(e[1])
    };
    match s {
        Shape::Disc(r) => (0..n).all(|i| inward([ps.x, ps.y], i) >= *r),
        Shape::Poly(v) => v
            .iter()
            .map(|p| ps.transform_point(*p))
            .all(|p| (0..n).all(|i| inward(p, i) >= 0.0)),
    }
}

/// A set of shapes rigidly attached to a moving frame.
#[derive(Debug, Clone)]
pub struct RigidBodies {
    parts: Vec<(Shape, Pose2)>,
    lever: f64,
}

impl RigidBodies {
    pub fn new(parts: Vec<(Shape, Pose2)>) -> Self {
        let lever = parts
            .iter()
            .map(|(s, off)| off.translation_norm() + s.bounding_radius())
            .fold(0.0, f64::max);
        RigidBodies { parts, lever }
    }

    pub fn single(shape: Shape) -> Self {
        RigidBodies::new(vec![(shape, Pose2::IDENTITY)])
    }

    pub fn parts(&self) -> &[(Shape, Pose2)] {
        &self.parts
    }

    /// Upper bound on the distance any point travels per radian of rotation.
    pub fn lever(&self) -> f64 {
        self.lever
    }

    pub fn placed_at(&self, frame: Pose2) -> Vec<Placed> {
        self.parts
            .iter()
            .map(|(s, off)| Placed::new(s, compose(frame, *off)))
            .collect()
    }

    /// Number of interpolation intervals so no point moves more than `step`
    /// between consecutive samples.
    pub fn intervals(&self, from: Pose2, to: Pose2, step: f64) -> usize {
        let trans = (to.x - from.x).hypot(to.y - from.y);
        let rot = angle_diff(from.theta, to.theta).abs() * self.lever;
        (((trans + rot) / step).ceil() as usize).max(1)
    }

    pub fn hits_at(&self, frame: Pose2, obstacles: &[Placed], margin: f64) -> bool {
        self.placed_at(frame)
            .iter()
            .any(|b| obstacles.iter().any(|o| b.near(o, margin)))
    }

    /// Checks the swept motion `from -> to` sampled at spacing <= `step`
    /// against prepared obstacles.
    pub fn sweep_clear(
        &self,
        from: Pose2,
        to: Pose2,
        obstacles: &[Placed],
        step: f64,
        margin: f64,
    ) -> bool {
        let n = self.intervals(from, to, step);
        (0..=n).all(|i| {
            let q = interpolate(from, to, i as f64 / n as f64);
            !self.hits_at(q, obstacles, margin)
        })
    }
}

/// True iff `s`, interpolated from `from` to `to` at spacing <= `step`, never
/// collides with any obstacle. Endpoints are included.
pub fn segment_valid(
    s: &Shape,
    from: Pose2,
    to: Pose2,
    obstacles: &[(Shape, Pose2)],
    step: f64,
) -> bool {
    assert!(step > 0.0, "segment_valid step must be positive");
    let placed: Vec<Placed> = obstacles.iter().map(|(o, p)| Placed::new(o, *p)).collect();
    RigidBodies::single(s.clone()).sweep_clear(from, to, &placed, step, 0.0)
}
