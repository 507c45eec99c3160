//! Planar geometry kernel.
//!
//! Orientation convention: polygons and quads are stored with positive
//! signed (shoelace) area in image coordinates (x right, y down). On screen
//! that reads top-left, top-right, bottom-right, bottom-left. The interior
//! lies to the left of every directed edge in the y-up sense, i.e. the
//! outward normal of edge direction `(dx, dy)` is `(dy, -dx)`.

mod corner;
mod fit;
mod homography;
mod polygon;

pub use corner::{corner_score_patch, min_eigen_score, LumaImage};
pub use fit::{circular_kmeans, fit_quad};
pub use homography::{estimate_homography, Homography};
pub use polygon::{
    clip_convex, polygon_area, potential_area, quad_iou, signed_area, ConvexPolygon,
    PotentialArea, Quad,
};

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point in continuous pixel coordinates. Pixel `(x, y)` covers
/// `[x, x + 1) x [y, y + 1)`; its center is `(x + 0.5, y + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2-D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Intersection of the lines `p + t*d` and `q + s*e`; `None` when parallel.
/// Returns `(point, t, s)`.
pub fn line_intersection(p: Point2, d: Point2, q: Point2, e: Point2) -> Option<(Point2, f64, f64)> {
    let denom = d.cross(e);
    let scale = d.norm() * e.norm();
    if scale == 0.0 || denom.abs() <= 1e-12 * scale {
        return None;
    }
    let w = q - p;
    let t = w.cross(e) / denom;
    let s = w.cross(d) / denom;
    Some((p + d * t, t, s))
}
