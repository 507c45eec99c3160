use serde::{Deserialize, Serialize};

use super::Point2;
use crate::error::GeometryError;

/// A 3x3 planar projective transform, scaled so `m[2][2] == 1` when that
/// element is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Build from a raw matrix, normalizing scale and checking invertibility.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let mut h = Homography { m };
        let s = h.m[2][2];
        if s.abs() > 1e-15 {
            for row in &mut h.m {
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
        }
        if !h.m.iter().flatten().all(|v| v.is_finite()) || h.det().abs() <= 1e-12 {
            return Err(GeometryError::DegenerateHomography);
        }
        Ok(h)
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Map a point, with perspective division.
    pub fn project(&self, p: Point2) -> Result<Point2, GeometryError> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        let x = m[0][0] * p.x + m[0][1] * p.y + m[0][2];
        let y = m[1][0] * p.x + m[1][1] * p.y + m[1][2];
        let scale = x.abs().max(y.abs()).max(1.0);
        if w.abs() <= 1e-12 * scale {
            return Err(GeometryError::PointAtInfinity);
        }
        Ok(Point2::new(x / w, y / w))
    }

    /// Homogeneous depth of `p` (the third coordinate before division).
    pub fn depth(&self, p: Point2) -> f64 {
        self.m[2][0] * p.x + self.m[2][1] * p.y + self.m[2][2]
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let m = &self.m;
        let det = self.det();
        if det.abs() <= 1e-300 {
            return Err(GeometryError::DegenerateHomography);
        }
        let inv = 1.0 / det;
        let r = [
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
            ],
        ];
        Homography::from_matrix(r)
    }

    /// `self` after `other`: maps `p` to `self(other(p))`.
    pub fn compose(&self, other: &Homography) -> Result<Homography, GeometryError> {
        Homography::from_matrix(matmul(&self.m, &other.m))
    }
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
fn normalizer(pts: &[Point2; 4]) -> [[f64; 3]; 3] {
    let c = pts.iter().fold(Point2::default(), |a, &p| a + p) * 0.25;
    let mean = pts.iter().map(|&p| p.dist(c)).sum::<f64>() / 4.0;
    let s = if mean > 0.0 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    [[s, 0.0, -s * c.x], [0.0, s, -s * c.y], [0.0, 0.0, 1.0]]
}

fn apply(t: &[[f64; 3]; 3], p: Point2) -> Point2 {
    Point2::new(
        t[0][0] * p.x + t[0][1] * p.y + t[0][2],
        t[1][0] * p.x + t[1][1] * p.y + t[1][2],
    )
}

fn has_collinear_triple(pts: &[Point2; 4]) -> bool {
    let scale = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| a.dist(*b)))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return true;
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                let area = (pts[j] - pts[i]).cross(pts[k] - pts[i]).abs();
                if area <= 1e-9 * scale * scale {
                    return true;
                }
            }
        }
    }
    false
}

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve8(mut a: [[f64; 9]; 8]) -> Option<[f64; 8]> {
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in (col + 1)..8 {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..9 {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = [0.0; 8];
    for row in (0..8).rev() {
        let mut s = a[row][8];
        for c in (row + 1)..8 {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Four-point direct linear transform with coordinate normalization.
pub fn estimate_homography(src: &[Point2; 4], dst: &[Point2; 4]) -> Result<Homography, GeometryError> {
    if src.iter().chain(dst.iter()).any(|p| !p.is_finite())
        || has_collinear_triple(src)
        || has_collinear_triple(dst)
    {
        return Err(GeometryError::DegenerateHomography);
    }
    let ts = normalizer(src);
    let td = normalizer(dst);

    let mut a = [[0.0; 9]; 8];
    for i in 0..4 {
        let s = apply(&ts, src[i]);
        let d = apply(&td, dst[i]);
        a[2 * i] = [s.x, s.y, 1.0, 0.0, 0.0, 0.0, -s.x * d.x, -s.y * d.x, d.x];
        a[2 * i + 1] = [0.0, 0.0, 0.0, s.x, s.y, 1.0, -s.x * d.y, -s.y * d.y, d.y];
    }
    let h = solve8(a).ok_or(GeometryError::DegenerateHomography)?;
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]];

    let td_inv = Homography { m: td }.inverse()?;
    Homography::from_matrix(matmul(&td_inv.m, &matmul(&hn, &ts)))
}
