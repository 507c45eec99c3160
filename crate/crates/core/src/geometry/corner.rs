//! Shi-Tomasi corner scoring over a small patch.

use super::Point2;
use crate::error::GeometryError;

/// Read-only single-channel intensity access.
pub trait LumaImage {
    fn width(&self) -> u32;
    fn height(&self) -> u32;
    fn luma(&self, x: u32, y: u32) -> f32;
}

impl LumaImage for image::GrayImage {
    fn width(&self) -> u32 {
        self.dimensions().0
    }
    fn height(&self) -> u32 {
        self.dimensions().1
    }
    fn luma(&self, x: u32, y: u32) -> f32 {
        f32::from(self.get_pixel(x, y)[0])
    }
}

/// Minimum eigenvalue of the Gaussian-weighted (3x3) structure tensor of
/// Sobel gradients at `(x, y)`. Reads clamp at the image border.
pub fn min_eigen_score<L: LumaImage + ?Sized>(img: &L, x: i64, y: i64) -> f64 {
    let (w, h) = (i64::from(img.width()), i64::from(img.height()));
    let at = |x: i64, y: i64| -> f64 {
        f64::from(img.luma(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32))
    };
    const GAUSS: [[f64; 3]; 3] = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            let (px, py) = (x + dx, y + dy);
            let gx = (at(px + 1, py - 1) + 2.0 * at(px + 1, py) + at(px + 1, py + 1)
                - at(px - 1, py - 1)
                - 2.0 * at(px - 1, py)
                - at(px - 1, py + 1))
                / 8.0;
            let gy = (at(px - 1, py + 1) + 2.0 * at(px, py + 1) + at(px + 1, py + 1)
                - at(px - 1, py - 1)
                - 2.0 * at(px, py - 1)
                - at(px + 1, py - 1))
                / 8.0;
            let wgt = GAUSS[(dy + 1) as usize][(dx + 1) as usize] / 16.0;
            sxx += wgt * gx * gx;
            sxy += wgt * gx * gy;
            syy += wgt * gy * gy;
        }
    }
    let half_tr = 0.5 * (sxx + syy);
    let disc = (0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy).sqrt();
    half_tr - disc
}

/// Highest-scoring pixel within `radius` of `center`, returned as the pixel
/// center. Ties go to the pixel nearest `center`, then row-major order.
pub fn corner_score_patch<L: LumaImage + ?Sized>(
    luma: &L,
    center: Point2,
    radius: u32,
) -> Result<Point2, GeometryError> {
    let (w, h) = (i64::from(luma.width()), i64::from(luma.height()));
    if !center.is_finite() {
        return Err(GeometryError::EmptyPatch);
    }
    let cx = center.x.floor() as i64;
    let cy = center.y.floor() as i64;
    let r = i64::from(radius);
    let (x0, x1) = ((cx - r).max(0), (cx + r).min(w - 1));
    let (y0, y1) = ((cy - r).max(0), (cy + r).min(h - 1));
    if x0 > x1 || y0 > y1 {
        return Err(GeometryError::EmptyPatch);
    }
    // Luma with a two pixel margin, then Sobel gradients with a one pixel
    // margin; same arithmetic as `min_eigen_score`.
    let (lw, lh) = ((x1 - x0 + 5) as usize, (y1 - y0 + 5) as usize);
    let mut lum = Vec::with_capacity(lw * lh);
    for y in y0 - 2..=y1 + 2 {
        for x in x0 - 2..=x1 + 2 {
            lum.push(f64::from(luma.luma(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32)));
        }
    }
    let at = |x: usize, y: usize| lum[y * lw + x];
    let (gw, gh) = (lw - 2, lh - 2);
    let mut grad = Vec::with_capacity(gw * gh);
    for y in 1..=gh {
        for x in 1..=gw {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1))
                / 8.0;
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1))
                / 8.0;
            grad.push((gx, gy));
        }
    }
    const GAUSS: [[f64; 3]; 3] = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
    let mut best: Option<(f64, f64, Point2)> = None;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (gx0, gy0) = ((x - x0) as usize, (y - y0) as usize);
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for dy in 0..3 {
                for dx in 0..3 {
                    let (gx, gy) = grad[(gy0 + dy) * gw + gx0 + dx];
                    let wgt = GAUSS[dy][dx] / 16.0;
                    sxx += wgt * gx * gx;
                    sxy += wgt * gx * gy;
                    syy += wgt * gy * gy;
                }
            }
            let half_tr = 0.5 * (sxx + syy);
            let score = half_tr - (0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy).sqrt();
            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let d = p.dist(center);
            let better = match best {
                None => true,
                Some((bs, bd, _)) => {
                    let tol = 1e-9 * bs.abs().max(1e-12);
                    score > bs + tol || ((score - bs).abs() <= tol && d < bd)
                }
            };
            if better {
                best = Some((score, d, p));
            }
        }
    }
    best.map(|(_, _, p)| p).ok_or(GeometryError::EmptyPatch)
}
