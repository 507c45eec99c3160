//! The five-stage detection cascade.
//!
//! The frame is sampled on a grid of step `N`. A seed fires where the A
//! channel rises by more than `a_diff_thresh` between consecutive samples of
//! a row, and the seed is then pushed through [`initial_scan`],
//! [`build_polygon`], [`poly_to_quad`] and [`decode`]. A seed abandoned at
//! any stage is counted against that stage.

mod stages;

pub use stages::{build_polygon, decode, initial_scan, poly_to_quad, sample_word, LabView};

use std::sync::Arc;
use std::time::{Duration, Instant};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::codec::SignatureTable;
use crate::colorspace::{LabLookup, LabPixel};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point2, Quad};

/// Tunable thresholds. Defaults follow the reference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Grid step in pixels.
    pub step: u32,
    /// Seed threshold on the A-channel rise between grid samples.
    pub a_diff_thresh: i32,
    /// Successive qualifying pixels needed to accept a border.
    pub successive: u32,
    /// Per-pixel difference that counts as crossing a border.
    pub border_thresh: i32,
    /// Polygon growth stops once area / (area + potential) exceeds this.
    pub conv_thresh: f64,
    pub max_center_iters: u32,
    pub max_polygon_scans: u32,
    /// Corner patch radius as a fraction of the mean quad edge.
    pub patch_scale: f64,
    /// Minimum B-channel spread per region for decoding.
    pub min_decode_contrast: i32,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            step: 4,
            a_diff_thresh: 25,
            successive: 3,
            border_thresh: 5,
            conv_thresh: 0.98,
            max_center_iters: 10,
            max_polygon_scans: 64,
            patch_scale: 0.1,
            min_decode_contrast: 15,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.step < 1 {
            return bad("step must be at least 1");
        }
        if self.successive < 1 {
            return bad("successive must be at least 1");
        }
        if !(self.conv_thresh > 0.0 && self.conv_thresh < 1.0) {
            return bad("conv_thresh must lie in (0, 1)");
        }
        if !(self.patch_scale > 0.0 && self.patch_scale.is_finite()) {
            return bad("patch_scale must be positive");
        }
        Ok(())
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    FindADiff,
    InitialScan,
    BuildPolygon,
    PolyToQuad,
    Decode,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::FindADiff,
        Stage::InitialScan,
        Stage::BuildPolygon,
        Stage::PolyToQuad,
        Stage::Decode,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::FindADiff => "FindADiff",
            Stage::InitialScan => "InitialScan",
            Stage::BuildPolygon => "BuildPolygon",
            Stage::PolyToQuad => "PolyToQuad",
            Stage::Decode => "Decode",
        }
    }
}

/// Work-in-progress detection state.
#[derive(Debug, Clone, PartialEq)]
pub struct TmpDet {
    pub reference_red: LabPixel,
    /// Mean of the per-direction green references of the initial scans.
    pub reference_green: LabPixel,
    /// Mean of the per-direction black references of the initial scans.
    pub reference_black: LabPixel,
    pub center: Point2,
    pub ring_rg: ConvexPolygon,
    pub ring_gb: ConvexPolygon,
    pub ring_bw: ConvexPolygon,
    /// Grid location `(x, y)` that triggered the cascade.
    pub seed: (u32, u32),
    /// Center iterations used before the outer scans.
    pub center_iters: u32,
    /// Rays cast while growing the polygons.
    pub polygon_scans: u32,
}

/// A decoded tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: usize,
    pub rotation: u8,
    /// Black/white boundary, starting at the top-left-most corner.
    pub quad: Quad,
    pub center: Point2,
}

/// Per-stage accumulators indexed by [`Stage::index`].
pub type StageArray<T> = [T; 5];

/// Detection output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub detections: Vec<Detection>,
    /// `FindADiff` holds the grid scan time net of the cascade stages.
    pub stage_times: StageArray<Duration>,
    /// Abandoned seeds per failing stage. The `FindADiff` entry is always 0
    /// since a seed only exists once that stage succeeded.
    pub stage_failures: StageArray<u32>,
    /// Seeds that reached each stage. Every seed passed `FindADiff`, so the
    /// first two entries both equal `seeds`.
    pub stage_entries: StageArray<u32>,
    /// Seeds that entered the cascade.
    pub seeds: u32,
    pub frame_time: Duration,
}

impl FrameResult {
    /// Seeds that did not produce a detection.
    pub fn abandoned_seeds(&self) -> u32 {
        self.seeds - self.detections.len() as u32
    }

    /// The stage blamed when the frame has no detection: `FindADiff` without
    /// seeds, otherwise the furthest stage any seed reached.
    pub fn failure_stage(&self) -> Option<Stage> {
        if !self.detections.is_empty() {
            return None;
        }
        if self.seeds == 0 {
            return Some(Stage::FindADiff);
        }
        Stage::ALL
            .iter()
            .rev()
            .copied()
            .find(|s| self.stage_failures[s.index()] > 0)
    }
}

/// A reusable detector bound to a parameter set and signature table.
#[derive(Debug, Clone)]
pub struct Detector {
    params: DetectorParams,
    table: Arc<SignatureTable>,
    lab: LabLookup,
}

impl Detector {
    pub fn new(params: DetectorParams, table: SignatureTable) -> Result<Self> {
        Self::with_shared(params, Arc::new(table), LabLookup::default())
    }

    pub fn with_shared(
        params: DetectorParams,
        table: Arc<SignatureTable>,
        lab: LabLookup,
    ) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, table, lab })
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    pub fn table(&self) -> &SignatureTable {
        &self.table
    }

    pub fn detect(&self, image: &RgbImage) -> FrameResult {
        detect_with(image, &self.params, &self.table, &self.lab)
    }
}

/// Run the full cascade over one frame using the shared LAB table.
pub fn detect(image: &RgbImage, params: &DetectorParams, table: &SignatureTable) -> FrameResult {
    detect_with(image, params, table, &LabLookup::default())
}

fn overlaps(a: &(Point2, Point2), b: &(Point2, Point2)) -> bool {
    a.0.x <= b.1.x && b.0.x <= a.1.x && a.0.y <= b.1.y && b.0.y <= a.1.y
}

pub fn detect_with(
    image: &RgbImage,
    params: &DetectorParams,
    table: &SignatureTable,
    lab: &LabLookup,
) -> FrameResult {
    let start = Instant::now();
    let view = LabView::new(image, lab);
    let (w, h) = image.dimensions();
    let n = params.step.max(1);
    let mut times = [Duration::ZERO; 5];
    let mut failures = [0u32; 5];
    let mut entries = [0u32; 5];
    let mut seeds = 0u32;
    let mut detections: Vec<Detection> = Vec::new();
    let mut boxes: Vec<(Point2, Point2)> = Vec::new();

    let timed = |stage: Stage, times: &mut StageArray<Duration>, t0: Instant| {
        times[stage.index()] += t0.elapsed();
    };

    let mut y = 0;
    while y < h {
        let fy = f64::from(y) + 0.5;
        let mut x = 0;
        let mut old_a = i32::from(view.lab(0, y).a);
        while x < w {
            let fx = f64::from(x) + 0.5;
            if let Some(b) = boxes
                .iter()
                .find(|(lo, hi)| fx >= lo.x && fx <= hi.x && fy >= lo.y && fy <= hi.y)
            {
                // jump past the detection and restart the difference chain
                x = (b.1.x.floor() as u32).saturating_add(1);
                if x >= w {
                    break;
                }
                old_a = i32::from(view.lab(x, y).a);
                x += n;
                continue;
            }
            let a = i32::from(view.lab(x, y).a);
            if a - old_a > params.a_diff_thresh {
                seeds += 1;
                entries[Stage::FindADiff.index()] += 1;
                entries[Stage::InitialScan.index()] += 1;
                let t0 = Instant::now();
                let tmp = initial_scan(&view, (x, y), params);
                timed(Stage::InitialScan, &mut times, t0);
                'cascade: {
                    let Some(mut tmp) = tmp else {
                        failures[Stage::InitialScan.index()] += 1;
                        break 'cascade;
                    };
                    entries[Stage::BuildPolygon.index()] += 1;
                    let t0 = Instant::now();
                    let grown = build_polygon(&view, &mut tmp, params);
                    timed(Stage::BuildPolygon, &mut times, t0);
                    if !grown {
                        failures[Stage::BuildPolygon.index()] += 1;
                        break 'cascade;
                    }
                    entries[Stage::PolyToQuad.index()] += 1;
                    let t0 = Instant::now();
                    let quad = poly_to_quad(&view, &tmp, params);
                    timed(Stage::PolyToQuad, &mut times, t0);
                    let Some(quad) = quad else {
                        failures[Stage::PolyToQuad.index()] += 1;
                        break 'cascade;
                    };
                    entries[Stage::Decode.index()] += 1;
                    let t0 = Instant::now();
                    let decoded = decode(&view, &quad, table, params);
                    timed(Stage::Decode, &mut times, t0);
                    let Some((id, rotation)) = decoded else {
                        failures[Stage::Decode.index()] += 1;
                        break 'cascade;
                    };
                    let bbox = quad.bbox();
                    if boxes.iter().any(|b| overlaps(b, &bbox)) {
                        failures[Stage::Decode.index()] += 1;
                        break 'cascade;
                    }
                    boxes.push(bbox);
                    detections.push(Detection {
                        id,
                        rotation,
                        quad,
                        center: tmp.center,
                    });
                }
            }
            old_a = a;
            x += n;
        }
        y += n;
    }

    let frame_time = start.elapsed();
    let cascade: Duration = times[1..].iter().sum();
    times[Stage::FindADiff.index()] = frame_time.saturating_sub(cascade);
    FrameResult {
        detections,
        stage_times: times,
        stage_failures: failures,
        stage_entries: entries,
        seeds,
        frame_time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_signature_table, TagFamily};
    use crate::taggen::{render_tag, TagPalette};
    use crate::geometry::quad_iou;

    fn table() -> SignatureTable {
        build_signature_table(&TagFamily::tag16h5())
    }

    fn pad(tag: &RgbImage, w: u32, h: u32, x0: u32, y0: u32) -> RgbImage {
        let mut img = RgbImage::from_pixel(w, h, image::Rgb([128, 128, 128]));
        image::imageops::replace(&mut img, tag, i64::from(x0), i64::from(y0));
        img
    }

    #[test]
    fn gray_frame_has_no_seeds() {
        let img = RgbImage::from_pixel(200, 120, image::Rgb([120, 120, 120]));
        let r = detect(&img, &DetectorParams::default(), &table());
        assert!(r.detections.is_empty());
        assert_eq!(r.seeds, 0);
        assert_eq!(r.stage_failures, [0; 5]);
        assert_eq!(r.failure_stage(), Some(Stage::FindADiff));
    }

    #[test]
    fn single_render_detected() {
        let fam = TagFamily::tag16h5();
        let t = render_tag(&fam, 5, 0, 16, &TagPalette::default()).unwrap();
        let img = pad(&t.image, 320, 240, 96, 56);
        let r = detect(&img, &DetectorParams::default(), &table());
        assert_eq!(r.detections.len(), 1, "{r:?}");
        let d = r.detections[0];
        assert_eq!((d.id, d.rotation), (5, 0));
        let gt = Quad::new(t.corners.corners.map(|c| c + Point2::new(96.0, 56.0))).unwrap();
        assert!(quad_iou(&d.quad, &gt) > 0.9);
        let cascade: u32 = r.stage_failures[1..].iter().sum();
        assert_eq!(cascade, r.abandoned_seeds());
    }

    #[test]
    fn two_tags() {
        let fam = TagFamily::tag16h5();
        let p = TagPalette::default();
        let a = render_tag(&fam, 1, 0, 12, &p).unwrap();
        let b = render_tag(&fam, 7, 3, 12, &p).unwrap();
        let mut img = pad(&a.image, 400, 200, 20, 40);
        image::imageops::replace(&mut img, &b.image, 250, 50);
        let r = detect(&img, &DetectorParams::default(), &table());
        let mut ids: Vec<(usize, u8)> = r.detections.iter().map(|d| (d.id, d.rotation)).collect();
        ids.sort();
        assert_eq!(ids, vec![(1, 0), (7, 3)]);
    }

    #[test]
    fn params_validation() {
        let p = DetectorParams {
            conv_thresh: 1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        assert!(DetectorParams::default().validate().is_ok());
    }
}
