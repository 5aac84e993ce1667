//! Planar vectors, poses and signed distance primitives (millimetres).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `deg` degrees counter-clockwise from +x.
    pub fn from_angle_deg(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn rotate_deg(self, deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// SE(2) pose: position in mm, heading in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, phi: f64) -> Self {
        Self { x, y, phi }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn to_local(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotate_deg(-self.phi)
    }

    pub fn to_world(&self, p: Vec2) -> Vec2 {
        p.rotate_deg(self.phi) + self.position()
    }
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_deg(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Disc { center: Vec2, radius: f64 },
    /// Convex polygon, vertices counter-clockwise.
    Polygon { vertices: Vec<Vec2> },
    /// Ring of centre-line radius `radius` and radial thickness `thickness`.
    Annulus { center: Vec2, radius: f64, thickness: f64 },
}

impl Primitive {
    /// Axis-aligned rectangle `w × h` centred at `center`, rotated by `angle_deg`.
    pub fn rect(center: Vec2, w: f64, h: f64, angle_deg: f64) -> Self {
        let (hw, hh) = (w / 2.0, h / 2.0);
        let vertices = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]
            .into_iter()
            .map(|(x, y)| Vec2::new(x, y).rotate_deg(angle_deg) + center)
            .collect();
        Primitive::Polygon { vertices }
    }

    /// Signed distance and outward unit normal in the primitive's frame.
    pub fn sdf(&self, p: Vec2) -> (f64, Vec2) {
        match self {
            Primitive::Disc { center, radius } => {
                let d = p - *center;
                let r = d.norm();
                let n = if r > 0.0 { d * (1.0 / r) } else { Vec2::new(1.0, 0.0) };
                (r - radius, n)
            }
            Primitive::Annulus { center, radius, thickness } => {
                let d = p - *center;
                let r = d.norm();
                let radial = if r > 0.0 { d * (1.0 / r) } else { Vec2::new(1.0, 0.0) };
                let n = if r >= *radius { radial } else { -radial };
                ((r - radius).abs() - thickness / 2.0, n)
            }
            Primitive::Polygon { vertices } => polygon_sdf(vertices, p),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Primitive::Disc { center, radius } => Primitive::Disc {
                center: *center * s,
                radius: radius * s,
            },
            Primitive::Annulus { center, radius, thickness } => Primitive::Annulus {
                center: *center * s,
                radius: radius * s,
                thickness: thickness * s,
            },
            Primitive::Polygon { vertices } => Primitive::Polygon {
                vertices: vertices.iter().map(|v| *v * s).collect(),
            },
        }
    }

    /// Farthest extent from the local origin.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Primitive::Disc { center, radius } => center.norm() + radius,
            Primitive::Annulus { center, radius, thickness } => center.norm() + radius + thickness / 2.0,
            Primitive::Polygon { vertices } => vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match self {
            Primitive::Disc { radius, .. } => PI * radius * radius,
            Primitive::Annulus { radius, thickness, .. } => 2.0 * PI * radius * thickness,
            Primitive::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>() / 2.0
            }
        }
    }
}

fn polygon_sdf(vertices: &[Vec2], p: Vec2) -> (f64, Vec2) {
    let n = vertices.len();
    let mut inside = true;
    let mut best = f64::INFINITY;
    let mut best_closest = p;
    let mut best_edge_normal = Vec2::new(1.0, 0.0);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let ab = b - a;
        if ab.cross(p - a) < 0.0 {
            inside = false;
        }
        let len2 = ab.dot(ab);
        let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
        let closest = a + ab * t;
        let d = (p - closest).norm();
        if d < best {
            best = d;
            best_closest = closest;
            // Outward normal of a CCW edge.
            best_edge_normal = Vec2::new(ab.y, -ab.x) * (1.0 / len2.sqrt());
        }
    }
    if inside {
        (-best, best_edge_normal)
    } else {
        (best, (p - best_closest) * (1.0 / best))
    }
}

/// Union of primitives: minimum distance wins, earliest primitive on ties.
pub fn union_sdf(primitives: &[Primitive], p: Vec2) -> (f64, Vec2) {
    let mut best = (f64::INFINITY, Vec2::new(1.0, 0.0));
    for prim in primitives {
        let r = prim.sdf(p);
        if r.0 < best.0 {
            best = r;
        }
    }
    best
}
