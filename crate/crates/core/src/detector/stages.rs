use image::RgbImage;

use super::{DetectorParams, TmpDet};
use crate::codec::{decode_bits, CellRegion, SignatureTable, TagLayout};
use crate::colorspace::{LabLookup, LabPixel, RgbPixel};
use crate::geometry::{
    corner_score_patch, estimate_homography, fit_quad, potential_area, ConvexPolygon, LumaImage,
    Point2, PotentialArea, Quad,
};
use crate::taggen::TagGeometry;

/// On-demand LAB access to an RGB frame.
#[derive(Clone, Copy)]
pub struct LabView<'a> {
    image: &'a RgbImage,
    lab: &'a LabLookup,
}

impl<'a> LabView<'a> {
    pub fn new(image: &'a RgbImage, lab: &'a LabLookup) -> Self {
        Self { image, lab }
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    #[inline]
    pub fn lab(&self, x: u32, y: u32) -> LabPixel {
        self.lab.convert(RgbPixel::from(*self.image.get_pixel(x, y)))
    }

    /// LAB value of the pixel containing `p`, `None` outside the frame.
    #[inline]
    pub fn lab_at(&self, p: Point2) -> Option<LabPixel> {
        let (x, y) = (p.x.floor(), p.y.floor());
        if x < 0.0 || y < 0.0 || x >= f64::from(self.width()) || y >= f64::from(self.height()) {
            return None;
        }
        Some(self.lab(x as u32, y as u32))
    }
}

impl LumaImage for LabView<'_> {
    fn width(&self) -> u32 {
        self.image.width()
    }
    fn height(&self) -> u32 {
        self.image.height()
    }
    fn luma(&self, x: u32, y: u32) -> f32 {
        f32::from(self.lab(x, y).l)
    }
}

/// A located border along a ray.
#[derive(Debug, Clone, Copy)]
struct Border {
    /// Ray parameter of the near edge of the first qualifying pixel.
    t: f64,
    /// Ray parameter of the last pixel of the qualifying run.
    t_end: f64,
    /// Value at the last pixel of the run.
    reference: LabPixel,
}

/// Step along `origin + t * dir` (unit `dir`) from `t_start` until `m`
/// successive samples satisfy `crossed`. Fails past `t_max` or the frame.
fn scan(
    view: &LabView,
    origin: Point2,
    dir: Point2,
    t_start: f64,
    t_max: f64,
    m: u32,
    mut crossed: impl FnMut(LabPixel) -> bool,
) -> Option<Border> {
    let mut run = 0;
    let mut first = 0.0;
    let mut t = t_start;
    while t <= t_max {
        let p = view.lab_at(origin + dir * t)?;
        if crossed(p) {
            if run == 0 {
                first = t;
            }
            run += 1;
            if run >= m {
                return Some(Border {
                    t: first - 0.5,
                    t_end: t,
                    reference: p,
                });
            }
        } else {
            run = 0;
        }
        t += 1.0;
    }
    None
}

struct RayHits {
    rg: Point2,
    gb: Point2,
    bw: Point2,
    green: LabPixel,
    black: LabPixel,
}

/// Find the three borders along one ray. `cap` is the first scan's limit;
/// later scans are limited to four times the red/green distance.
fn scan_ray(
    view: &LabView,
    origin: Point2,
    dir: Point2,
    reference_red: LabPixel,
    cap: f64,
    p: &DetectorParams,
) -> Option<RayHits> {
    let bt = p.border_thresh;
    let m = p.successive;
    let rg = scan(view, origin, dir, 1.0, cap, m, |q| {
        i32::from(reference_red.a) - i32::from(q.a) > bt
    })?;
    let outer_cap = 4.0 * rg.t.max(f64::from(m));
    // The outer references follow the region being crossed: the first
    // pixels past a border are often blends, so keep the extreme value seen.
    let mut green = rg.reference;
    let gb = scan(view, origin, dir, rg.t_end + 1.0, outer_cap, m, |q| {
        let crossed = i32::from(q.a) - i32::from(green.a) > bt;
        if !crossed && q.a < green.a {
            green = q;
        }
        crossed
    })?;
    let mut black = gb.reference;
    let bw = scan(view, origin, dir, gb.t_end + 1.0, outer_cap, m, |q| {
        let crossed = i32::from(q.l) - i32::from(black.l) > bt;
        if !crossed && q.l < black.l {
            black = q;
        }
        crossed
    })?;
    Some(RayHits {
        rg: origin + dir * rg.t,
        gb: origin + dir * gb.t,
        bw: origin + dir * bw.t,
        green,
        black,
    })
}

fn pixel_center(p: Point2) -> Point2 {
    Point2::new(p.x.floor() + 0.5, p.y.floor() + 0.5)
}

// up, right, down, left: positive orientation in image coordinates
const AXES: [Point2; 4] = [
    Point2::new(0.0, -1.0),
    Point2::new(1.0, 0.0),
    Point2::new(0.0, 1.0),
    Point2::new(-1.0, 0.0),
];

fn mean_lab(px: &[LabPixel]) -> LabPixel {
    let n = px.len().max(1) as u32;
    let avg = |f: fn(&LabPixel) -> u8| (px.iter().map(|p| u32::from(f(p))).sum::<u32>() / n) as u8;
    LabPixel {
        l: avg(|p| p.l),
        a: avg(|p| p.a),
        b: avg(|p| p.b),
    }
}

/// Locate the tag center from a seed and build the three initial rings.
pub fn initial_scan(view: &LabView, seed: (u32, u32), p: &DetectorParams) -> Option<TmpDet> {
    let (w, h) = (view.width(), view.height());
    if seed.0 >= w || seed.1 >= h {
        return None;
    }
    let seed_ref = view.lab(seed.0, seed.1);
    let first_cap = f64::from(w.max(h) / 2).min(256.0);
    let bt = p.border_thresh;
    let mut center = Point2::new(f64::from(seed.0) + 0.5, f64::from(seed.1) + 0.5);

    let mut iters = 0;
    while iters < p.max_center_iters.max(1) {
        iters += 1;
        let mut t = [0.0; 4];
        for (k, dir) in AXES.iter().enumerate() {
            let b = scan(view, center, *dir, 1.0, first_cap, p.successive, |q| {
                i32::from(seed_ref.a) - i32::from(q.a) > bt
            })?;
            t[k] = b.t;
        }
        // midpoint of the up/down and left/right border pairs
        let next = pixel_center(Point2::new(
            center.x + 0.5 * (t[1] - t[3]),
            center.y + 0.5 * (t[2] - t[0]),
        ));
        let moved = next.dist(center);
        center = next;
        if moved < 1.0 {
            break;
        }
    }

    let reference_red = view.lab_at(center)?;
    if i32::from(seed_ref.a) - i32::from(reference_red.a) > bt {
        // the converged center is not red
        return None;
    }
    let mut hits = Vec::with_capacity(4);
    for dir in AXES {
        hits.push(scan_ray(view, center, dir, reference_red, first_cap, p)?);
    }
    let ring = |f: fn(&RayHits) -> Point2| ConvexPolygon::new(hits.iter().map(f).collect()).ok();
    Some(TmpDet {
        reference_red,
        reference_green: mean_lab(&hits.iter().map(|r| r.green).collect::<Vec<_>>()),
        reference_black: mean_lab(&hits.iter().map(|r| r.black).collect::<Vec<_>>()),
        center,
        ring_rg: ring(|r| r.rg)?,
        ring_gb: ring(|r| r.gb)?,
        ring_bw: ring(|r| r.bw)?,
        seed,
        center_iters: iters,
        polygon_scans: 0,
    })
}

/// Greedily grow the three rings toward the largest potential area of the
/// black/white ring until the remaining potential drops below the
/// convergence ratio. Returns `false` when the seed must be abandoned.
pub fn build_polygon(view: &LabView, tmp: &mut TmpDet, p: &DetectorParams) -> bool {
    // Edges whose last scan added nothing, keyed by their endpoints.
    let mut exhausted: Vec<(Point2, Point2)> = Vec::new();
    loop {
        let ring = &tmp.ring_bw;
        let area = ring.area();
        if area <= 0.0 {
            return false;
        }
        let mut total = 0.0;
        let mut best: Option<(usize, f64, Point2)> = None;
        for i in 0..ring.len() {
            let (a, b) = ring.edge(i);
            let (pot, target) = if exhausted.contains(&(a, b)) {
                (0.0, a)
            } else {
                match potential_area(ring, i) {
                    PotentialArea::Bounded { area: pa, apex } => (pa.min(area), apex),
                    PotentialArea::Unbounded => (area, (a + b) * 0.5),
                }
            };
            total += pot;
            if pot > 0.0 && best.is_none_or(|(_, bp, _)| pot > bp) {
                best = Some((i, pot, target));
            }
        }
        if area / (area + total) > p.conv_thresh {
            return true;
        }
        if tmp.polygon_scans >= p.max_polygon_scans {
            return false;
        }
        let Some((edge, _, target)) = best else {
            return false;
        };
        tmp.polygon_scans += 1;

        let origin = tmp.center;
        let Some(dir) = (target - origin).normalized() else {
            exhausted.push(ring.edge(edge));
            continue;
        };
        // distance to the current black/white ring along the ray
        let (ea, eb) = ring.edge(edge);
        let reach = crate::geometry::line_intersection(origin, dir, ea, eb - ea)
            .map_or(area.sqrt(), |(_, t, _)| t.abs());
        let Some(hit) = scan_ray(view, origin, dir, tmp.reference_red, 4.0 * reach.max(1.0), p)
        else {
            return false;
        };
        if !tmp.ring_bw.insert_hull(hit.bw) {
            exhausted.push(tmp.ring_bw.edge(edge));
        }
        tmp.ring_gb.insert_hull(hit.gb);
        tmp.ring_rg.insert_hull(hit.rg);
    }
}

/// Fit a quad to the black/white ring and snap each corner to the best
/// Shi-Tomasi response nearby.
pub fn poly_to_quad(view: &LabView, tmp: &TmpDet, p: &DetectorParams) -> Option<Quad> {
    let coarse = fit_quad(&tmp.ring_bw).ok()?;
    let radius = (p.patch_scale * coarse.mean_edge_length()).round().clamp(2.0, 15.0) as u32;
    let mut refined = coarse.corners;
    for c in &mut refined {
        *c = corner_score_patch(view, *c, radius).ok()?;
    }
    Quad::new(refined).ok().map(Quad::starting_top_left)
}

/// Sample the 16 cell centers through the quad homography and assemble the
/// code word by per-region midpoint thresholding of B. Returns `None` when
/// either region lacks contrast.
pub fn sample_word(view: &LabView, quad: &Quad, p: &DetectorParams) -> Option<u16> {
    let h = estimate_homography(&TagGeometry::CANONICAL_CORNERS, &quad.corners).ok()?;
    let layout = TagLayout;
    let mut samples = [(0u8, CellRegion::Red, 0u16); 16];
    for row in 0..4 {
        for col in 0..4 {
            let q = h.project(TagGeometry::cell_center(row, col)).ok()?;
            let b = view.lab_at(q)?.b;
            samples[row * 4 + col] = (b, layout.region(row, col), layout.cell_mask(row, col));
        }
    }
    let mut word = 0u16;
    for region in [CellRegion::Red, CellRegion::Green] {
        let vals = samples.iter().filter(|s| s.1 == region);
        let (lo, hi) = vals
            .clone()
            .fold((u8::MAX, u8::MIN), |(lo, hi), s| (lo.min(s.0), hi.max(s.0)));
        if i32::from(hi) - i32::from(lo) < p.min_decode_contrast {
            return None;
        }
        let mid = (f64::from(lo) + f64::from(hi)) / 2.0;
        for s in vals {
            if f64::from(s.0) > mid {
                word |= s.2;
            }
        }
    }
    Some(word)
}

/// Decode the quad to `(id, rotation)`.
pub fn decode(
    view: &LabView,
    quad: &Quad,
    table: &SignatureTable,
    p: &DetectorParams,
) -> Option<(usize, u8)> {
    decode_bits(sample_word(view, quad, p)?, table)
}
