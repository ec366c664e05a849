//! Millimeter-space vectors and axis-aligned boxes shared by the simulator,
//! the safety layer and the renderer.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or displacement in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Formats a coordinate the way observation lists print it: integral values
/// without a fractional part, everything else in shortest round-trip form.
pub fn fmt_coord(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // normalizes -0 to 0
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}]",
            fmt_coord(self.x),
            fmt_coord(self.y),
            fmt_coord(self.z)
        )
    }
}

/// Axis-aligned box in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_center(center: Vec3, half_extents: Vec3) -> Self {
        Self {
            min: center - half_extents,
            max: center + half_extents,
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Vec3 {
        (self.max - self.min) * 0.5
    }

    pub fn is_valid(&self) -> bool {
        self.min.x < self.max.x && self.min.y < self.max.y && self.min.z < self.max.z
    }

    /// Open-interval overlap: boxes that only share a face do not intersect.
    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min.x < o.max.x
            && o.min.x < self.max.x
            && self.min.y < o.max.y
            && o.min.y < self.max.y
            && self.min.z < o.max.z
            && o.min.z < self.max.z
    }

    /// Closed containment of a point.
    pub fn contains_point(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains_point(o.min) && self.contains_point(o.max)
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb::new(self.min.min(o.min), self.max.max(o.max))
    }

    pub fn inflate(&self, by: Vec3) -> Aabb {
        Aabb::new(self.min - by, self.max + by)
    }

    pub fn scaled_about_center(&self, k: f64) -> Aabb {
        Aabb::from_center(self.center(), self.half_extents() * k)
    }

    /// Euclidean distance from a point to the box (0 inside).
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        Vec3::new(dx, dy, dz).norm()
    }

    /// Slab test for the closed segment `a → b` against the open box interior.
    pub fn segment_intersects(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for (o, dir, lo, hi) in [
            (a.x, d.x, self.min.x, self.max.x),
            (a.y, d.y, self.min.y, self.max.y),
            (a.z, d.z, self.min.z, self.max.z),
        ] {
            if dir.abs() < 1e-12 {
                if o <= lo || o >= hi {
                    return false;
                }
            } else {
                let mut ta = (lo - o) / dir;
                let mut tb = (hi - o) / dir;
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 >= t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_contact_is_not_overlap() {
        let a = Aabb::from_center(Vec3::ZERO, Vec3::splat(15.0));
        let b = Aabb::from_center(Vec3::new(30.0, 0.0, 0.0), Vec3::splat(15.0));
        assert!(!a.intersects(&b));
        let c = Aabb::from_center(Vec3::new(10.0, 0.0, 0.0), Vec3::splat(15.0));
        assert!(a.intersects(&c));
    }

    #[test]
    fn segment_slab() {
        let b = Aabb::new(Vec3::new(10.0, -5.0, -5.0), Vec3::new(20.0, 5.0, 5.0));
        assert!(b.segment_intersects(Vec3::ZERO, Vec3::new(30.0, 0.0, 0.0)));
        assert!(!b.segment_intersects(Vec3::ZERO, Vec3::new(9.0, 0.0, 0.0)));
        assert!(!b.segment_intersects(Vec3::new(0.0, 10.0, 0.0), Vec3::new(30.0, 10.0, 0.0)));
    }

    #[test]
    fn coord_format() {
        assert_eq!(Vec3::new(-270.0, 190.0, 30.0).to_string(), "[-270, 190, 30]");
        assert_eq!(fmt_coord(-0.0), "0");
        assert_eq!(fmt_coord(0.5), "0.5");
    }
}
