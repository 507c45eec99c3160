//! Property suites for the pure building blocks: color conversion, codes,
//! planar geometry, and scoring.

use chromatag::codec::{
    build_signature_table, decode_bits, filter_family, min_rotational_hamming, rotate90, rotate_k,
    TagFamily,
};
use chromatag::colorspace::{rgb_to_lab, LabTable, RgbPixel};
use chromatag::detector::Detection;
use chromatag::eval::{
    adiff_histogram, bin_recall, match_frame, BinAxis, FrameOutcome, GroundTruth, HistogramMode,
    Metrics,
};
use chromatag::geometry::{
    estimate_homography, fit_quad, potential_area, quad_iou, ConvexPolygon, Point2, PotentialArea,
    Quad,
};
use image::RgbImage;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt() -> impl Strategy<Value = Point2> {
    (0.0..752.0f64, 0.0..480.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

/// A convex quad: a jittered square of side 20..200 somewhere in the frame.
fn quad() -> impl Strategy<Value = Quad> {
    (
        20.0..200.0f64,
        0.0..500.0f64,
        0.0..250.0f64,
        prop::array::uniform8(-0.2..0.2f64),
    )
        .prop_filter_map("not convex", |(s, x0, y0, j)| {
            let base = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            let c: [Point2; 4] = std::array::from_fn(|k| {
                Point2::new(x0 + s * (base[k].0 + j[2 * k]), y0 + s * (base[k].1 + j[2 * k + 1]))
            });
            Quad::new(c).ok()
        })
}

/// Convex hull (monotone chain) in the crate's orientation.
fn hull(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    let cross = |o: Point2, a: Point2, b: Point2| (a - o).cross(b - o);
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn convex_polygon() -> impl Strategy<Value = ConvexPolygon> {
    prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 4..24).prop_filter_map(
        "degenerate hull",
        |v| {
            let h = hull(v.into_iter().map(|(x, y)| Point2::new(x, y)).collect());
            if h.len() < 3 {
                return None;
            }
            ConvexPolygon::from_any_orientation(h)
                .ok()
                .filter(|p| p.area() > 1.0)
        },
    )
}

fn raster_iou(a: &Quad, b: &Quad) -> f64 {
    let (la, ha) = a.bbox();
    let (lb, hb) = b.bbox();
    let (x0, y0) = (la.x.min(lb.x), la.y.min(lb.y));
    let (x1, y1) = (ha.x.max(hb.x), ha.y.max(hb.y));
    let n = 400;
    let (mut inter, mut union) = (0u64, 0u64);
    for i in 0..n {
        for j in 0..n {
            let p = Point2::new(
                x0 + (x1 - x0) * (f64::from(i) + 0.5) / f64::from(n),
                y0 + (y1 - y0) * (f64::from(j) + 0.5) / f64::from(n),
            );
            let (ia, ib) = (a.contains(p), b.contains(p));
            inter += u64::from(ia && ib);
            union += u64::from(ia || ib);
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Every corner turns by at least `min_deg`, as a projected square does.
fn squarish(q: &Quad, min_deg: f64) -> bool {
    (0..4).all(|k| {
        let (a, b, c) = (q.corners[k], q.corners[(k + 1) % 4], q.corners[(k + 2) % 4]);
        let (d0, d1) = (b - a, c - b);
        d0.cross(d1).atan2(d0.dot(d1)).to_degrees() >= min_deg
    })
}

fn same_corner_set(a: &Quad, b: &Quad, tol: f64) -> bool {
    (0..4).any(|s| (0..4).all(|k| a.corners[k].dist(b.corners[(k + s) % 4]) <= tol))
}

#[test]
fn gray_axis_is_neutral_and_monotone() {
    let mut last = 0;
    for v in 0..=255u8 {
        let lab = rgb_to_lab(RgbPixel::new(v, v, v));
        assert!((127..=129).contains(&lab.a) && (127..=129).contains(&lab.b), "{v}: {lab:?}");
        assert!(lab.l >= last);
        last = lab.l;
    }
}

#[test]
fn lut_matches_direct_on_random_sample() {
    let table = LabTable::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200_000 {
        let p = RgbPixel::new(rng.random(), rng.random(), rng.random());
        assert_eq!(table.get(p), rgb_to_lab(p), "{p:?}");
    }
}

#[test]
fn rotate90_is_a_cell_permutation() {
    let mut seen = vec![false; 1 << 16];
    for w in 0..=u16::MAX {
        let r = rotate90(w);
        assert_eq!(r.count_ones(), w.count_ones());
        assert_eq!(rotate_k(w, 4), w);
        assert!(!seen[usize::from(r)]);
        seen[usize::from(r)] = true;
    }
}

#[test]
fn every_rotation_of_every_code_decodes() {
    let family = TagFamily::tag16h5();
    let table = build_signature_table(&family);
    for id in 0..family.len() {
        let code = family.code(id).unwrap();
        for k in 0..4 {
            assert_eq!(decode_bits(rotate_k(code, k), &table), Some((id, k)));
        }
    }
}

#[test]
fn shipped_family_distance() {
    let family = TagFamily::tag16h5();
    assert_eq!(family.len(), 28);
    assert!(min_rotational_hamming(&family.codes).unwrap() >= 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lut_matches_direct(r: u8, g: u8, b: u8) {
        let p = RgbPixel::new(r, g, b);
        prop_assert_eq!(LabTable::new().get(p), rgb_to_lab(p));
    }

    #[test]
    fn filter_is_idempotent(codes in prop::collection::vec(any::<u16>(), 1..40)) {
        if let Ok(once) = filter_family("x", &codes, 0) {
            let twice = filter_family("x", &once.codes, 0).unwrap();
            prop_assert_eq!(once.codes, twice.codes);
        }
    }

    #[test]
    fn homography_fits_its_points(src in quad(), dst in quad()) {
        let h = estimate_homography(&src.corners, &dst.corners).unwrap();
        for (s, d) in src.corners.iter().zip(&dst.corners) {
            prop_assert!(h.project(*s).unwrap().dist(*d) < 1e-9);
        }
    }

    #[test]
    fn homography_inverse_round_trips(src in quad(), dst in quad(), p in pt()) {
        let h = estimate_homography(&src.corners, &dst.corners).unwrap();
        let inv = h.inverse().unwrap();
        // only points well in front of the camera
        prop_assume!(h.depth(p).abs() > 1e-3 * h.depth(src.center()).abs());
        let q = h.project(p).unwrap();
        prop_assert!(inv.project(q).unwrap().dist(p) < 1e-6 * (1.0 + q.norm()));
    }

    #[test]
    fn homography_translation_equivariance(
        src in quad(), dst in quad(), tx in -50.0..50.0f64, ty in -50.0..50.0f64, p in pt(),
    ) {
        let t = Point2::new(tx, ty);
        let h = estimate_homography(&src.corners, &dst.corners).unwrap();
        let ht = estimate_homography(&src.corners.map(|c| c + t), &dst.corners.map(|c| c + t)).unwrap();
        let (Ok(a), Ok(b)) = (h.project(p), ht.project(p + t)) else {
            return Ok(());
        };
        prop_assert!((a + t).dist(b) < 1e-6 * (1.0 + a.norm()));
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in quad(), b in quad()) {
        let (ab, ba) = (quad_iou(&a, &b), quad_iou(&b, &a));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((quad_iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iou_agrees_with_rasterization(a in quad(), d in (-60.0..60.0f64, -60.0..60.0f64), b in quad()) {
        // shift `b` onto `a` so most pairs overlap
        let b = Quad::new(b.corners.map(|c| c - b.center() + a.center() + Point2::new(d.0, d.1))).unwrap();
        prop_assert!((quad_iou(&a, &b) - raster_iou(&a, &b)).abs() <= 0.01);
    }

    #[test]
    fn potential_apex_keeps_convexity(p in convex_polygon()) {
        for e in 0..p.len() {
            if let PotentialArea::Bounded { area, apex } = potential_area(&p, e) {
                prop_assert!(area >= 0.0);
                let mut grown = p.clone();
                if grown.try_insert(e, apex) {
                    prop_assert!(ConvexPolygon::new(grown.vertices().to_vec()).is_ok());
                    prop_assert!((grown.area() - p.area() - area).abs() < 1e-6 * (1.0 + p.area()));
                }
            }
        }
    }

    #[test]
    fn area_matches_monte_carlo(p in convex_polygon(), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| p.contains(Point2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))))
            .count();
        let estimate = 1e4 * hits as f64 / f64::from(n);
        // 1% of the area, or a few standard errors for slivers
        let se = 1e4 * (p.area() / 1e4 * (1.0 - p.area() / 1e4) / f64::from(n)).sqrt();
        prop_assert!((estimate - p.area()).abs() <= (0.01 * p.area()).max(4.0 * se));
    }

    #[test]
    fn fit_quad_ignores_start_vertex(
        q in quad().prop_filter("too skewed", |q| squarish(q, 50.0)),
        per_side in 2usize..8,
        shift in 0usize..32,
    ) {
        let mut ring = Vec::new();
        for k in 0..4 {
            let (a, b) = (q.corners[k], q.corners[(k + 1) % 4]);
            for t in 0..per_side {
                ring.push(a * (1.0 - t as f64 / per_side as f64) + b * (t as f64 / per_side as f64));
            }
        }
        let base = fit_quad(&ConvexPolygon::from_any_orientation(ring.clone()).unwrap()).unwrap();
        let s = shift % ring.len();
        ring.rotate_left(s);
        let shifted = fit_quad(&ConvexPolygon::from_any_orientation(ring).unwrap()).unwrap();
        prop_assert!(same_corner_set(&base, &shifted, 1e-9));
        prop_assert!(same_corner_set(&base, &q, 0.5));
    }

    #[test]
    fn match_frame_accounting(
        gts in prop::collection::vec((0usize..4, quad()), 0..4),
        dets in prop::collection::vec((0usize..4, quad()), 0..5),
        thresh in 0.1..0.9f64,
    ) {
        let gt: Vec<GroundTruth> = gts.iter().map(|&(id, quad)| GroundTruth { id, quad }).collect();
        let ds: Vec<Detection> = dets
            .iter()
            .map(|&(id, quad)| Detection { id, rotation: 0, quad, center: quad.center() })
            .collect();
        let m = match_frame(&ds, &gt, thresh);
        prop_assert_eq!(m.metrics.tp + m.metrics.fn_, gt.len() as u64);
        prop_assert_eq!(m.metrics.tp + m.metrics.fp, ds.len() as u64);
        prop_assert_eq!(m.pairs.len() as u64, m.metrics.tp);
        for p in &m.pairs {
            prop_assert!(p.iou >= thresh);
            prop_assert_eq!(ds[p.det].id, gt[p.gt].id);
        }
    }

    #[test]
    fn binned_recall_adds_up(
        frames in prop::collection::vec((0.0..=100.0f64, 0u64..3, 0u64..3), 1..60),
        cuts in prop::collection::btree_set(1u32..100, 0..6),
    ) {
        let outcomes: Vec<FrameOutcome> = frames
            .iter()
            .map(|&(size, tp, fn_)| FrameOutcome {
                tag_size: size,
                viewing_angle: 0.0,
                preset: "WB".into(),
                metrics: Metrics { tp, fp: 0, fn_ },
            })
            .collect();
        let mut edges = vec![0.0];
        edges.extend(cuts.iter().map(|&c| f64::from(c)));
        edges.push(100.0);
        let binned = bin_recall(&outcomes, BinAxis::TagSize, &edges).unwrap();
        let from_bins: Metrics = binned.bins.iter().map(|b| b.metrics).sum();
        let total: Metrics = outcomes.iter().map(|o| o.metrics).sum();
        prop_assert_eq!(from_bins, total);
        if let Some(r) = total.recall() {
            let weighted: f64 = binned
                .bins
                .iter()
                .filter_map(|b| b.metrics.recall().map(|r| r * b.metrics.ground_truths() as f64))
                .sum();
            prop_assert!((weighted / total.ground_truths() as f64 - r).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_counts_every_pair(w in 2u32..40, h in 1u32..20, n in 1u32..6, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = RgbImage::from_fn(w, h, |_, _| image::Rgb(rng.random()));
        let hist = adiff_histogram(
            &[img.clone(), img],
            HistogramMode::BackgroundAll,
            None,
            n,
            &Default::default(),
        )
        .unwrap();
        let per_row = u64::from(w.div_ceil(n) - 1);
        prop_assert_eq!(hist.total(), 2 * per_row * u64::from(h.div_ceil(n)));
    }
}
