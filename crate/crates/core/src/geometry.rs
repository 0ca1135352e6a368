//! Box geometry shared by placement, annotation and asset fitting.

use std::f64::consts::TAU;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::gaussian::RigidTransform;

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if y >= TAU {
        0.0
    } else {
        y
    }
}

/// Gravity-aligned 3D box. `size` is `(width, length, height)`; length runs
/// along the heading (`yaw` about +z), width across it.
#[derive(Debug, Clone, PartialEq)]
pub struct Box3D {
    pub center: Vector3<f64>,
    pub size: Vector3<f64>,
    pub yaw: f64,
    pub label: String,
}

impl Box3D {
    pub fn new(center: Vector3<f64>, size: Vector3<f64>, yaw: f64, label: impl Into<String>) -> Self {
        Self {
            center,
            size,
            yaw: normalize_yaw(yaw),
            label: label.into(),
        }
    }

    pub fn width(&self) -> f64 {
        self.size.x
    }

    pub fn length(&self) -> f64 {
        self.size.y
    }

    pub fn height(&self) -> f64 {
        self.size.z
    }

    pub fn bottom(&self) -> f64 {
        self.center.z - 0.5 * self.height()
    }

    pub fn top(&self) -> f64 {
        self.center.z + 0.5 * self.height()
    }

    pub fn is_valid(&self) -> bool {
        self.size.iter().all(|s| *s > 0.0 && s.is_finite())
            && self.center.iter().all(|c| c.is_finite())
            && (0.0..TAU).contains(&self.yaw)
    }

    pub fn footprint(&self) -> BevRect {
        BevRect {
            center: self.center.xy(),
            half_length: 0.5 * self.length(),
            half_width: 0.5 * self.width(),
            yaw: self.yaw,
        }
    }

    /// Radius of the footprint's circumscribed circle.
    pub fn footprint_radius(&self) -> f64 {
        0.5 * self.width().hypot(self.length())
    }

    /// The eight corners in world coordinates.
    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw, hh) = (0.5 * self.length(), 0.5 * self.width(), 0.5 * self.height());
        let mut out = [Vector3::zeros(); 8];
        let mut i = 0;
        for dx in [-hl, hl] {
            for dy in [-hw, hw] {
                for dz in [-hh, hh] {
                    out[i] = self.center + Vector3::new(c * dx - s * dy, s * dx + c * dy, dz);
                    i += 1;
                }
            }
        }
        out
    }

    /// Maps the box through a transform that rotates about +z only.
    pub fn transformed(&self, t: &RigidTransform) -> Box3D {
        Box3D::new(t.apply(&self.center), self.size, self.yaw + t.yaw(), self.label.clone())
    }

    pub fn z_overlaps(&self, other: &Box3D) -> bool {
        self.bottom() < other.top() && other.bottom() < self.top()
    }
}

/// Oriented rectangle on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevRect {
    pub center: Vector2<f64>,
    /// Half extent along the heading.
    pub half_length: f64,
    pub half_width: f64,
    pub yaw: f64,
}

impl BevRect {
    pub fn axes(&self) -> [Vector2<f64>; 2] {
        let (s, c) = self.yaw.sin_cos();
        [Vector2::new(c, s), Vector2::new(-s, c)]
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let [u, v] = self.axes();
        let (a, b) = (u * self.half_length, v * self.half_width);
        [
            self.center - a - b,
            self.center + a - b,
            self.center + a + b,
            self.center - a + b,
        ]
    }

    pub fn inflated(&self, margin: f64) -> BevRect {
        BevRect {
            half_length: self.half_length + margin,
            half_width: self.half_width + margin,
            ..*self
        }
    }

    fn project(&self, axis: &Vector2<f64>) -> (f64, f64) {
        let c = self.center.dot(axis);
        let [u, v] = self.axes();
        let r = self.half_length * u.dot(axis).abs() + self.half_width * v.dot(axis).abs();
        (c - r, c + r)
    }

    /// Separating-axis test over both rectangles' edge normals. Touching
    /// rectangles (zero-width projection overlap) do not intersect.
    pub fn intersects(&self, other: &BevRect) -> bool {
        let [a0, a1] = self.axes();
        let [b0, b1] = other.axes();
        [a0, a1, b0, b1].iter().all(|axis| {
            let (min_a, max_a) = self.project(axis);
            let (min_b, max_b) = other.project(axis);
            max_a > min_b && max_b > min_a
        })
    }

    /// Euclidean distance from `p` to the filled rectangle (0 inside).
    pub fn distance_to_point(&self, p: &Vector2<f64>) -> f64 {
        let [u, v] = self.axes();
        let d = p - self.center;
        let du = (d.dot(&u).abs() - self.half_length).max(0.0);
        let dv = (d.dot(&v).abs() - self.half_width).max(0.0);
        du.hypot(dv)
    }
}

/// Axis-aligned image-plane rectangle, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect2 {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> f64 {
        (self.max_x - self.min_x).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.max_y - self.min_y).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vector2<f64> {
        Vector2::new(0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }

    pub fn intersection(&self, other: &Rect2) -> Rect2 {
        Rect2::new(
            self.min_x.max(other.min_x),
            self.min_y.max(other.min_y),
            self.max_x.min(other.max_x),
            self.max_y.min(other.max_y),
        )
    }

    pub fn iou(&self, other: &Rect2) -> f64 {
        let inter = self.intersection(other).area();
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yaw_wraps_into_range() {
        assert_eq!(normalize_yaw(0.0), 0.0);
        assert!((normalize_yaw(-0.5) - (TAU - 0.5)).abs() < 1e-12);
        assert!((normalize_yaw(TAU + 1.0) - 1.0).abs() < 1e-12);
        assert!(normalize_yaw(-1e-18) < TAU);
    }

    #[test]
    fn corners_of_axis_aligned_box() {
        let b = Box3D::new(Vector3::new(1.0, 2.0, 0.5), Vector3::new(2.0, 4.0, 1.0), 0.0, "car");
        let cs = b.corners();
        let min_x = cs.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
        let max_y = cs.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min_x, -1.0);
        assert_eq!(max_y, 3.0);
    }

    #[test]
    fn sat_basic_cases() {
        let a = Box3D::new(Vector3::zeros(), Vector3::new(2.0, 4.0, 1.5), 0.3, "car").footprint();
        assert!(a.intersects(&a));
        let mut far = a;
        far.center.x += 100.0;
        assert!(!a.intersects(&far));
        // Edge contact is not an intersection.
        let touching = BevRect {
            center: Vector2::new(4.0, 0.0),
            half_length: 2.0,
            half_width: 1.0,
            yaw: 0.0,
        };
        let base = BevRect {
            center: Vector2::zeros(),
            half_length: 2.0,
            half_width: 1.0,
            yaw: 0.0,
        };
        assert!(!base.intersects(&touching));
    }

    #[test]
    fn point_distance() {
        let r = BevRect {
            center: Vector2::zeros(),
            half_length: 2.0,
            half_width: 1.0,
            yaw: 0.0,
        };
        assert_eq!(r.distance_to_point(&Vector2::new(0.5, 0.5)), 0.0);
        assert!((r.distance_to_point(&Vector2::new(5.0, 5.0)) - (9.0f64 + 16.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = Rect2::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect2::new(5.0, 5.0, 6.0, 6.0)), 0.0);
        assert!((a.iou(&Rect2::new(1.0, 0.0, 3.0, 2.0)) - 1.0 / 3.0).abs() < 1e-12);
    }
}
