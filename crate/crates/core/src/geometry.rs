//! Planar and camera-space geometry shared by the world, the scene graph and
//! the evaluator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// A point (or vector) in the world plane, meters.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn heading_to(self, other: Point2) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Camera-local 3D point: x right, y down, z along the optical axis.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(self, other: Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar agent pose. `yaw` is counter-clockwise from +x and kept in (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn with_yaw(&self, yaw: f64) -> Self {
        Pose::new(self.x, self.y, yaw)
    }

    pub fn with_position(&self, p: Point2) -> Self {
        Pose::new(p.x, p.y, self.yaw)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn expand(&self, margin: f64) -> Rect {
        Rect::new(
            Point2::new(self.min.x - margin, self.min.y - margin),
            Point2::new(self.max.x + margin, self.max.y + margin),
        )
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x && other.min.x <= self.max.x && self.min.y <= other.max.y && other.min.y <= self.max.y
    }
}

/// Object footprint in the world plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Footprint {
    Polygon { vertices: Vec<Point2> },
    Disc { center: Point2, radius: f64 },
}

impl Footprint {
    pub fn rect(min: Point2, max: Point2) -> Self {
        Footprint::Polygon {
            vertices: vec![min, Point2::new(max.x, min.y), max, Point2::new(min.x, max.y)],
        }
    }

    pub fn disc(center: Point2, radius: f64) -> Self {
        Footprint::Disc { center, radius }
    }

    pub fn area(&self) -> f64 {
        match self {
            Footprint::Disc { radius, .. } => PI * radius * radius,
            Footprint::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return 0.0;
                }
                let n = vertices.len();
                let twice: f64 = (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum();
                twice.abs() / 2.0
            }
        }
    }

    pub fn centroid(&self) -> Point2 {
        match self {
            Footprint::Disc { center, .. } => *center,
            Footprint::Polygon { vertices } => {
                let n = vertices.len() as f64;
                let sum = vertices.iter().fold(Point2::default(), |acc, &v| acc + v);
                sum * (1.0 / n)
            }
        }
    }

    pub fn bbox(&self) -> Rect {
        match self {
            Footprint::Disc { center, radius } => Rect::new(
                Point2::new(center.x - radius, center.y - radius),
                Point2::new(center.x + radius, center.y + radius),
            ),
            Footprint::Polygon { vertices } => {
                let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
                let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    min.x = min.x.min(v.x);
                    min.y = min.y.min(v.y);
                    max.x = max.x.max(v.x);
                    max.y = max.y.max(v.y);
                }
                Rect::new(min, max)
            }
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Footprint::Disc { center, radius } => p.distance(*center) <= *radius,
            Footprint::Polygon { vertices } => {
                // crossing number
                let n = vertices.len();
                let mut inside = false;
                let mut j = n - 1;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[j]);
                    if (a.y > p.y) != (b.y > p.y) {
                        let x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
                        if p.x < x {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
        }
    }

    /// Distance from `p` to the footprint; zero inside.
    pub fn distance(&self, p: Point2) -> f64 {
        match self {
            Footprint::Disc { center, radius } => (p.distance(*center) - radius).max(0.0),
            Footprint::Polygon { vertices } => {
                if self.contains(p) {
                    return 0.0;
                }
                let n = vertices.len();
                (0..n)
                    .map(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Smallest `t >= 0` with `origin + t * dir` on the footprint boundary,
    /// for a unit `dir`. Returns `Some(0.0)` when the origin is inside.
    pub fn ray_entry(&self, origin: Point2, dir: Point2) -> Option<f64> {
        match self {
            Footprint::Disc { center, radius } => {
                let oc = origin - *center;
                let b = oc.dot(dir);
                let c = oc.dot(oc) - radius * radius;
                if c <= 0.0 {
                    return Some(0.0);
                }
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                (t >= 0.0).then_some(t)
            }
            Footprint::Polygon { vertices } => {
                if self.contains(origin) {
                    return Some(0.0);
                }
                let n = vertices.len();
                let mut best: Option<f64> = None;
                for i in 0..n {
                    if let Some(t) = ray_segment(origin, dir, vertices[i], vertices[(i + 1) % n]) {
                        best = Some(best.map_or(t, |b: f64| b.min(t)));
                    }
                }
                best
            }
        }
    }
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Ray parameter where `origin + t*dir` crosses segment `ab`, if any.
fn ray_segment(origin: Point2, dir: Point2, a: Point2, b: Point2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - origin;
    let t = ao.cross(e) / denom;
    let u = ao.cross(dir) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
}
