//! Planar geometry primitives shared by the simulator and the planners.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

/// Planar pose: position in meters, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Distance along the ray `origin + t * dir` (t >= 0, `dir` unit) to the
/// segment `[p, q]`, or `None` when they do not meet. Rays parallel to the
/// segment never report a hit; the neighbouring edges catch the endpoints.
pub fn ray_segment_distance(
    origin: &Point2<f64>,
    dir: &Vector2<f64>,
    p: &Point2<f64>,
    q: &Point2<f64>,
) -> Option<f64> {
    let edge = q - p;
    let denom = cross(dir, &edge);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = p - origin;
    let t = cross(&w, &edge) / denom;
    let s = cross(&w, dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&s) {
        Some(t)
    } else {
        None
    }
}

/// Euclidean distance from `pt` to the segment `[p, q]`.
pub fn point_segment_distance(pt: &Point2<f64>, p: &Point2<f64>, q: &Point2<f64>) -> f64 {
    let edge = q - p;
    let len2 = edge.norm_squared();
    if len2 == 0.0 {
        return (pt - p).norm();
    }
    let s = ((pt - p).dot(&edge) / len2).clamp(0.0, 1.0);
    (pt - (p + edge * s)).norm()
}

/// A closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2<f64>>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2<f64>>) -> Self {
        Self { vertices }
    }

    pub fn from_coords(coords: &[[f64; 2]]) -> Self {
        Self::new(coords.iter().map(|c| Point2::new(c[0], c[1])).collect())
    }

    /// Axis-aligned rectangle from its min and max corners.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::from_coords(&[[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2<f64>, Point2<f64>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Shoelace area, positive for counter-clockwise winding.
    pub fn signed_area(&self) -> f64 {
        self.edges()
            .map(|(a, b)| a.x * b.y - b.x * a.y)
            .sum::<f64>()
            * 0.5
    }

    /// Even-odd crossing test.
    pub fn contains(&self, pt: &Point2<f64>) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > pt.y) != (b.y > pt.y) {
                let x_cross = a.x + (pt.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if pt.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, pt: &Point2<f64>) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(pt, &a, &b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance to the boundary, negated when `pt` lies inside.
    pub fn signed_distance(&self, pt: &Point2<f64>) -> f64 {
        let d = self.boundary_distance(pt);
        if self.contains(pt) {
            -d
        } else {
            d
        }
    }

    pub fn transformed(&self, rotation: f64, translation: Vector2<f64>) -> Self {
        let (s, c) = rotation.sin_cos();
        Self::new(
            self.vertices
                .iter()
                .map(|v| Point2::new(c * v.x - s * v.y, s * v.x + c * v.y) + translation)
                .collect(),
        )
    }
}
