//! Polygon to quadrilateral fitting via length-weighted circular K-means
//! over directed edge angles.

use std::f64::consts::{PI, TAU};

use super::{line_intersection, ConvexPolygon, Point2, Quad};
use crate::error::GeometryError;

const MAX_ITERS: usize = 20;
/// Minimum separation between initial cluster centers.
const SEED_SEPARATION: f64 = PI / 4.0;

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Weighted circular K-means. Returns `(centers, assignment)`; a center is
/// `None` when its cluster ended up empty.
pub fn circular_kmeans(
    angles: &[f64],
    weights: &[f64],
    init: &[f64],
) -> (Vec<Option<f64>>, Vec<usize>) {
    let k = init.len();
    let mut centers: Vec<Option<f64>> = init.iter().map(|&c| Some(c)).collect();
    let mut assign = vec![usize::MAX; angles.len()];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, &a) in angles.iter().enumerate() {
            let best = (0..k)
                .filter_map(|c| centers[c].map(|m| (c, circ_dist(a, m))))
                .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
                .map_or(0, |(c, _)| c);
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![(0.0, 0.0, 0.0); k];
        for (i, &a) in angles.iter().enumerate() {
            let s = &mut sums[assign[i]];
            s.0 += weights[i] * a.cos();
            s.1 += weights[i] * a.sin();
            s.2 += weights[i];
        }
        for (c, (x, y, w)) in sums.into_iter().enumerate() {
            centers[c] = (w > 0.0 && x.hypot(y) > 1e-12).then(|| y.atan2(x).rem_euclid(TAU));
        }
        if !changed {
            break;
        }
    }
    (centers, assign)
}

/// Fit a quadrilateral to a convex polygon.
pub fn fit_quad(p: &ConvexPolygon) -> Result<Quad, GeometryError> {
    let v = p.vertices();
    let n = v.len();
    if n < 4 {
        return Err(GeometryError::QuadFit);
    }
    let mut angles = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let d = v[(i + 1) % n] - v[i];
        angles.push(d.y.atan2(d.x).rem_euclid(TAU));
        weights.push(d.norm());
    }

    // Seeds: longest edges, skipping directions already represented.
    let mut order: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]).then(i.cmp(&j)));
    let mut init: Vec<f64> = Vec::with_capacity(4);
    for &i in &order {
        if init.iter().all(|&c| circ_dist(c, angles[i]) >= SEED_SEPARATION) {
            init.push(angles[i]);
            if init.len() == 4 {
                break;
            }
        }
    }
    if init.len() < 4 {
        return Err(GeometryError::QuadFit);
    }

    let (centers, assign) = circular_kmeans(&angles, &weights, &init);
    let centers: Vec<f64> = centers
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(GeometryError::QuadFit)?;

    let centroid = p.centroid();
    let mut lines: Vec<(f64, Point2, Point2)> = Vec::with_capacity(4);
    for (c, &theta) in centers.iter().enumerate() {
        let dir = Point2::new(theta.cos(), theta.sin());
        let normal = Point2::new(dir.y, -dir.x);
        let mut best: Option<(f64, Point2)> = None;
        for (i, _) in assign.iter().enumerate().filter(|(_, &a)| a == c) {
            for q in [v[i], v[(i + 1) % n]] {
                let d = (q - centroid).dot(normal);
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, q));
                }
            }
        }
        let (_, anchor) = best.ok_or(GeometryError::QuadFit)?;
        lines.push((theta, anchor, dir));
    }
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut corners = [Point2::default(); 4];
    for k in 0..4 {
        let (_, p0, d0) = lines[k];
        let (_, p1, d1) = lines[(k + 1) % 4];
        let (x, _, _) = line_intersection(p0, d0, p1, d1).ok_or(GeometryError::QuadFit)?;
        corners[k] = x;
    }
    Quad::new(corners)
        .map(Quad::starting_top_left)
        .map_err(|_| GeometryError::QuadFit)
}
