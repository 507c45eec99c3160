use serde::{Deserialize, Serialize};

use super::{line_intersection, Point2};
use crate::error::GeometryError;

/// Signed shoelace area; positive for the crate's orientation convention.
pub fn signed_area(pts: &[Point2]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        acc += a.cross(b);
    }
    0.5 * acc
}

fn bbox_area(pts: &[Point2]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    ((x1 - x0) * (y1 - y0)).max(0.0)
}

/// Convexity tolerance for a vertex set.
pub(crate) fn convexity_eps(pts: &[Point2]) -> f64 {
    1e-9 * bbox_area(pts)
}

fn turn(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - b)
}

fn is_convex_ring(pts: &[Point2], eps: f64) -> bool {
    let n = pts.len();
    if n < 3 || pts.iter().any(|p| !p.is_finite()) {
        return false;
    }
    let mut winding = 0.0;
    for i in 0..n {
        let a = pts[(i + n - 1) % n];
        let b = pts[i];
        let c = pts[(i + 1) % n];
        let t = turn(a, b, c);
        if t < -eps {
            return false;
        }
        let (d0, d1) = (b - a, c - b);
        if d0.norm() > 0.0 && d1.norm() > 0.0 {
            winding += d0.cross(d1).atan2(d0.dot(d1));
        }
    }
    // A star-shaped "convex" vertex walk winds more than once.
    winding <= 2.0 * std::f64::consts::PI + 1e-6
}

/// A convex polygon with positive orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices {
                needed: 3,
                got: vertices.len(),
            });
        }
        let eps = convexity_eps(&vertices);
        if signed_area(&vertices) < -eps || !is_convex_ring(&vertices, eps) {
            return Err(GeometryError::NotConvex);
        }
        Ok(Self { vertices })
    }

    /// Accept either orientation; reversed to positive if needed.
    pub fn from_any_orientation(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn vertex_centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let s = self
            .vertices
            .iter()
            .fold(Point2::default(), |acc, &p| acc + p);
        s * (1.0 / n)
    }

    /// Area centroid; falls back to the vertex mean for degenerate polygons.
    pub fn centroid(&self) -> Point2 {
        let a = self.area();
        if a.abs() < 1e-12 {
            return self.vertex_centroid();
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        let n = self.vertices.len();
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    /// Index of the edge a ray from interior point `origin` leaves through.
    pub fn exit_edge(&self, origin: Point2, dir: Point2) -> Option<usize> {
        let n = self.vertices.len();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let (a, b) = self.edge(i);
            let e = b - a;
            if let Some((_, t, s)) = line_intersection(origin, dir, a, e) {
                if t > 0.0 && (-1e-9..=1.0 + 1e-9).contains(&s) {
                    // nearest crossing wins when the origin sits near a vertex
                    if best.is_none_or(|(_, bt)| t < bt) {
                        best = Some((i, t));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Insert `p` between the endpoints of edge `edge`. Returns `false` and
    /// leaves the polygon unchanged if the result would not be convex or the
    /// point does not lie outside the edge.
    pub fn try_insert(&mut self, edge: usize, p: Point2) -> bool {
        let n = self.vertices.len();
        let (a, b) = self.edge(edge);
        if !p.is_finite() || (b - a).cross(p - a) > 0.0 {
            // strictly inside the edge's half-plane: no growth
            return false;
        }
        let mut candidate = self.vertices.clone();
        candidate.insert((edge % n) + 1, p);
        let eps = convexity_eps(&candidate);
        if !is_convex_ring(&candidate, eps) {
            return false;
        }
        self.vertices = candidate;
        true
    }

    /// Grow to the convex hull of the polygon and `p`. Vertices that fall
    /// inside the new hull are removed. Returns `false` and leaves the
    /// polygon unchanged when `p` is not outside it.
    pub fn insert_hull(&mut self, p: Point2) -> bool {
        if !p.is_finite() {
            return false;
        }
        let n = self.vertices.len();
        let visible: Vec<bool> = (0..n)
            .map(|i| {
                let (a, b) = self.edge(i);
                let e = b - a;
                e.cross(p - a) < -1e-9 * e.norm().max(1e-12)
            })
            .collect();
        if !visible.iter().any(|&v| v) || visible.iter().all(|&v| v) {
            return false;
        }
        // first and last edges of the visible chain
        let first = (0..n)
            .find(|&i| visible[i] && !visible[(i + n - 1) % n])
            .expect("chain has a start");
        let mut last = first;
        while visible[(last + 1) % n] {
            last = (last + 1) % n;
        }
        let mut candidate = Vec::with_capacity(n + 1);
        let mut k = (last + 1) % n;
        loop {
            candidate.push(self.vertices[k]);
            if k == first {
                break;
            }
            k = (k + 1) % n;
        }
        candidate.push(p);
        match ConvexPolygon::new(candidate) {
            Ok(poly) => {
                *self = poly;
                true
            }
            Err(_) => false,
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b) = self.edge(i);
            (b - a).cross(p - a) >= -1e-9
        })
    }
}

/// Shoelace area of a convex polygon.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    p.area()
}

/// Maximum convexity-preserving growth beyond one polygon edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialArea {
    Bounded { area: f64, apex: Point2 },
    /// The neighboring edges diverge (or are parallel and distinct).
    Unbounded,
}

impl PotentialArea {
    pub fn bounded_area(&self) -> Option<f64> {
        match *self {
            PotentialArea::Bounded { area, .. } => Some(area),
            PotentialArea::Unbounded => None,
        }
    }
}

/// Triangle between edge `edge_index` and the intersection of its two
/// neighbors extended outward.
pub fn potential_area(p: &ConvexPolygon, edge_index: usize) -> PotentialArea {
    let v = p.vertices();
    let n = v.len();
    let i = edge_index % n;
    let prev = v[(i + n - 1) % n];
    let a = v[i];
    let b = v[(i + 1) % n];
    let next = v[(i + 2) % n];
    let d_prev = a - prev;
    let d_next = next - b;
    let edge = b - a;

    let scale = edge.norm().max(d_prev.norm()).max(d_next.norm());
    let on_edge_line = |q: Point2| edge.cross(q - a).abs() <= 1e-12 * scale * scale;

    if d_prev.norm() == 0.0 || d_next.norm() == 0.0 {
        return PotentialArea::Bounded {
            area: 0.0,
            apex: a + edge * 0.5,
        };
    }
    match line_intersection(a, d_prev, b, d_next) {
        Some((apex, t, s)) => {
            // apex must lie forward of `a` along the previous edge and
            // behind `b` along the next edge
            if t < -1e-12 || s > 1e-12 {
                return PotentialArea::Unbounded;
            }
            let area = 0.5 * edge.cross(apex - a).abs();
            PotentialArea::Bounded { area, apex }
        }
        None => {
            if on_edge_line(prev) && on_edge_line(next) {
                PotentialArea::Bounded {
                    area: 0.0,
                    apex: a + edge * 0.5,
                }
            } else {
                PotentialArea::Unbounded
            }
        }
    }
}

/// A convex quadrilateral with positive orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub corners: [Point2; 4],
}

impl Quad {
    pub fn new(corners: [Point2; 4]) -> Result<Self, GeometryError> {
        let pts = corners.to_vec();
        let eps = convexity_eps(&pts);
        if signed_area(&pts) <= eps.max(1e-12) {
            return Err(GeometryError::Degenerate);
        }
        if !is_convex_ring(&pts, eps) {
            return Err(GeometryError::NotConvex);
        }
        Ok(Self { corners })
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.corners)
    }

    /// Rotate the corner cycle so it starts at the top-left-most corner
    /// (smallest `x + y`, ties by smaller `y`).
    pub fn starting_top_left(mut self) -> Self {
        let start = (0..4)
            .min_by(|&i, &j| {
                let (p, q) = (self.corners[i], self.corners[j]);
                (p.x + p.y)
                    .total_cmp(&(q.x + q.y))
                    .then(p.y.total_cmp(&q.y))
            })
            .unwrap_or(0);
        self.corners.rotate_left(start);
        self
    }

    pub fn center(&self) -> Point2 {
        self.corners.iter().fold(Point2::default(), |a, &p| a + p) * 0.25
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::MAX, f64::MAX);
        let mut hi = Point2::new(f64::MIN, f64::MIN);
        for p in &self.corners {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn mean_edge_length(&self) -> f64 {
        (0..4)
            .map(|i| self.corners[i].dist(self.corners[(i + 1) % 4]))
            .sum::<f64>()
            / 4.0
    }

    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.corners.to_vec(),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.to_polygon().contains(p)
    }
}

/// Sutherland-Hodgman: clip `subject` against every half-plane of the
/// positively oriented convex `clip`.
pub fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut out = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let e = b - a;
        let inside = |p: Point2| e.cross(p - a) >= 0.0;
        let input = std::mem::take(&mut out);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci != pi {
                let d = cur - prev;
                let denom = e.cross(d);
                if denom.abs() > 0.0 {
                    let t = e.cross(a - prev) / denom;
                    out.push(prev + d * t);
                }
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

/// Intersection over union of two quads.
pub fn quad_iou(a: &Quad, b: &Quad) -> f64 {
    let inter = signed_area(&clip_convex(&a.corners, &b.corners)).abs();
    let union = a.area().abs() + b.area().abs() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
