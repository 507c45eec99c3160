//! Scoring and reporting: detection matching, corner accuracy, binned
//! recall, A-difference histograms and timing summaries.
//!
//! Every CSV row type carries a `schema` column holding [`REPORT_SCHEMA`].

use std::io::Write;
use std::time::Duration;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::{LabLookup, RgbPixel};
use crate::detector::{Detection, FrameResult, Stage, StageArray};
use crate::error::{Error, Result};
use crate::geometry::{quad_iou, Point2, Quad};

pub const REPORT_SCHEMA: &str = "chromatag.report.v1";

/// Detection counts with derived rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Metrics {
    /// `None` when there are no detections.
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// `None` when there is no ground truth.
    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn ground_truths(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn add(&mut self, o: &Metrics) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

impl std::iter::Sum for Metrics {
    fn sum<I: Iterator<Item = Metrics>>(iter: I) -> Self {
        iter.fold(Metrics::default(), |mut acc, m| {
            acc.add(&m);
            acc
        })
    }
}

/// One annotated tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub id: usize,
    pub quad: Quad,
}

/// A detection paired with a ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub det: usize,
    pub gt: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatch {
    pub metrics: Metrics,
    pub pairs: Vec<MatchPair>,
}

/// Greedy matching by descending IoU. A pair is only eligible when the ids
/// agree and the IoU reaches `iou_thresh`.
pub fn match_frame(dets: &[Detection], gt: &[GroundTruth], iou_thresh: f64) -> FrameMatch {
    let mut cand = Vec::new();
    for (i, d) in dets.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            if d.id != g.id {
                continue;
            }
            let iou = quad_iou(&d.quad, &g.quad);
            if iou >= iou_thresh {
                cand.push(MatchPair { det: i, gt: j, iou });
            }
        }
    }
    cand.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.det.cmp(&b.det))
            .then(a.gt.cmp(&b.gt))
    });
    let (mut det_used, mut gt_used) = (vec![false; dets.len()], vec![false; gt.len()]);
    let mut pairs = Vec::new();
    for c in cand {
        if !det_used[c.det] && !gt_used[c.gt] {
            det_used[c.det] = true;
            gt_used[c.gt] = true;
            pairs.push(c);
        }
    }
    let tp = pairs.len() as u64;
    FrameMatch {
        metrics: Metrics {
            tp,
            fp: dets.len() as u64 - tp,
            fn_: gt.len() as u64 - tp,
        },
        pairs,
    }
}

/// Per-corner distances under the cyclic corner shift with least total error.
pub fn corner_errors(det: &Quad, gt: &Quad) -> [f64; 4] {
    (0..4)
        .map(|s| std::array::from_fn(|k| det.corners[(k + s) % 4].dist(gt.corners[k])))
        .min_by(|a: &[f64; 4], b: &[f64; 4]| a.iter().sum::<f64>().total_cmp(&b.iter().sum()))
        .expect("four shifts")
}

/// Fraction of matched corners within each radius.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerCdf {
    pub radii: Vec<f64>,
    /// `None` when there are no matched corners.
    pub fractions: Vec<Option<f64>>,
    pub corners: usize,
}

/// `pairs` holds (detected, ground truth) quads of matched detections.
pub fn corner_error_cdf(pairs: &[(Quad, Quad)], radii: &[f64]) -> CornerCdf {
    let errs: Vec<f64> = pairs.iter().flat_map(|(d, g)| corner_errors(d, g)).collect();
    let fractions = radii
        .iter()
        .map(|&r| {
            (!errs.is_empty())
                .then(|| errs.iter().filter(|&&e| e <= r).count() as f64 / errs.len() as f64)
        })
        .collect();
    CornerCdf {
        radii: radii.to_vec(),
        fractions,
        corners: errs.len(),
    }
}

/// Evaluation result for one frame together with its sweep coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub tag_size: f64,
    pub viewing_angle: f64,
    pub preset: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinAxis {
    TagSize,
    ViewingAngle,
}

impl BinAxis {
    pub fn name(self) -> &'static str {
        match self {
            BinAxis::TagSize => "tag_size",
            BinAxis::ViewingAngle => "viewing_angle",
        }
    }

    fn value(self, o: &FrameOutcome) -> f64 {
        match self {
            BinAxis::TagSize => o.tag_size,
            BinAxis::ViewingAngle => o.viewing_angle,
        }
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "bin edges need at least two strictly increasing values".into(),
        ));
    }
    Ok(())
}

/// Bins are half-open `[lo, hi)` except the last, which includes `hi`.
/// Values outside the edges fall in no bin.
fn bin_index(edges: &[f64], v: f64) -> Option<usize> {
    let last = edges.len() - 2;
    if v == edges[last + 1] {
        return Some(last);
    }
    edges.windows(2).position(|w| v >= w[0] && v < w[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallBin {
    pub lo: f64,
    pub hi: f64,
    pub metrics: Metrics,
}

impl RecallBin {
    /// An empty bin has no ground truth; its recall is undefined.
    pub fn is_empty(&self) -> bool {
        self.metrics.ground_truths() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedRecall {
    pub axis: BinAxis,
    pub bins: Vec<RecallBin>,
}

pub fn bin_recall(outcomes: &[FrameOutcome], axis: BinAxis, edges: &[f64]) -> Result<BinnedRecall> {
    check_edges(edges)?;
    let mut bins: Vec<RecallBin> = edges
        .windows(2)
        .map(|w| RecallBin {
            lo: w[0],
            hi: w[1],
            metrics: Metrics::default(),
        })
        .collect();
    for o in outcomes {
        if let Some(i) = bin_index(edges, axis.value(o)) {
            bins[i].metrics.add(&o.metrics);
        }
    }
    Ok(BinnedRecall { axis, bins })
}

/// Recall over tag size (rows) and viewing angle (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct JointRecall {
    pub size_edges: Vec<f64>,
    pub angle_edges: Vec<f64>,
    pub cells: Vec<Vec<Metrics>>,
}

pub fn bin_recall_joint(
    outcomes: &[FrameOutcome],
    size_edges: &[f64],
    angle_edges: &[f64],
) -> Result<JointRecall> {
    check_edges(size_edges)?;
    check_edges(angle_edges)?;
    let mut cells = vec![vec![Metrics::default(); angle_edges.len() - 1]; size_edges.len() - 1];
    for o in outcomes {
        if let (Some(i), Some(j)) = (
            bin_index(size_edges, o.tag_size),
            bin_index(angle_edges, o.viewing_angle),
        ) {
            cells[i][j].add(&o.metrics);
        }
    }
    Ok(JointRecall {
        size_edges: size_edges.to_vec(),
        angle_edges: angle_edges.to_vec(),
        cells,
    })
}

/// Totals over frames whose `axis` value lies in `[lo, hi]`.
pub fn metrics_in_range(outcomes: &[FrameOutcome], axis: BinAxis, lo: f64, hi: f64) -> Metrics {
    outcomes
        .iter()
        .filter(|o| (lo..=hi).contains(&axis.value(o)))
        .map(|o| o.metrics)
        .sum()
}

/// Totals over frames rendered with the named photometric preset.
pub fn metrics_for_preset(outcomes: &[FrameOutcome], preset: &str) -> Metrics {
    outcomes
        .iter()
        .filter(|o| o.preset == preset)
        .map(|o| o.metrics)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    /// Per-frame maximum over samples inside the tag mask.
    TagRegionMax,
    /// Every sampled difference.
    BackgroundAll,
}

/// Histogram of signed A differences with unit bins over `[-255, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ADiffHistogram {
    pub mode: HistogramMode,
    pub counts: Vec<u64>,
}

impl ADiffHistogram {
    pub const MIN: i32 = -255;
    pub const MAX: i32 = 255;

    fn empty(mode: HistogramMode) -> Self {
        Self {
            mode,
            counts: vec![0; (Self::MAX - Self::MIN + 1) as usize],
        }
    }

    fn push(&mut self, d: i32) {
        self.counts[(d - Self::MIN) as usize] += 1;
    }

    pub fn count(&self, d: i32) -> u64 {
        if (Self::MIN..=Self::MAX).contains(&d) {
            self.counts[(d - Self::MIN) as usize]
        } else {
            0
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Values strictly greater than `t`.
    pub fn count_above(&self, t: i32) -> u64 {
        (t.max(Self::MIN - 1) + 1..=Self::MAX).map(|d| self.count(d)).sum()
    }

    pub fn fraction_above(&self, t: i32) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| self.count_above(t) as f64 / n as f64)
    }

    /// Occupied `(value, count)` pairs in ascending order.
    pub fn nonzero(&self) -> impl Iterator<Item = (i32, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as i32 + Self::MIN, c))
    }
}

/// Sample every `n`th pixel of every `n`th row and collect the A difference
/// of each sample to the previous one on its row. In
/// [`HistogramMode::TagRegionMax`] only pairs with both samples inside the
/// frame's mask count, and each frame contributes its maximum.
pub fn adiff_histogram(
    images: &[RgbImage],
    mode: HistogramMode,
    masks: Option<&[Quad]>,
    n: u32,
    lab: &LabLookup,
) -> Result<ADiffHistogram> {
    if n == 0 {
        return Err(Error::InvalidArgument("sampling step must be at least 1".into()));
    }
    if mode == HistogramMode::TagRegionMax {
        match masks {
            None => return Err(Error::InvalidArgument("tag mode needs one mask per image".into())),
            Some(m) if m.len() != images.len() => {
                return Err(Error::InvalidArgument(format!(
                    "{} masks for {} images",
                    m.len(),
                    images.len()
                )))
            }
            _ => {}
        }
    }
    let per_image: Vec<Result<ADiffHistogram>> = images
        .par_iter()
        .enumerate()
        .map(|(k, img)| {
            let mask = masks.filter(|_| mode == HistogramMode::TagRegionMax).map(|m| m[k]);
            let mut h = ADiffHistogram::empty(mode);
            let mut best: Option<i32> = None;
            let (w, ht) = img.dimensions();
            for y in (0..ht).step_by(n as usize) {
                let fy = f64::from(y) + 0.5;
                let mut prev: Option<(i32, bool)> = None;
                for x in (0..w).step_by(n as usize) {
                    let a = i32::from(lab.convert(RgbPixel::from(*img.get_pixel(x, y))).a);
                    let inside = mask.is_none_or(|q| q.contains(Point2::new(f64::from(x) + 0.5, fy)));
                    if let Some((pa, pin)) = prev {
                        let d = a - pa;
                        match mode {
                            HistogramMode::BackgroundAll => h.push(d),
                            HistogramMode::TagRegionMax => {
                                if inside && pin {
                                    best = Some(best.map_or(d, |b| b.max(d)));
                                }
                            }
                        }
                    }
                    prev = Some((a, inside));
                }
            }
            if mode == HistogramMode::TagRegionMax {
                let b = best.ok_or_else(|| {
                    Error::InvalidArgument(format!("mask of image {k} covers no sample pair"))
                })?;
                h.push(b);
            }
            Ok(h)
        })
        .collect();
    let mut out = ADiffHistogram::empty(mode);
    for h in per_image {
        for (o, c) in out.counts.iter_mut().zip(h?.counts) {
            *o += c;
        }
    }
    Ok(out)
}

/// Frame rate figures for one subset of frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpsSummary {
    pub frames: usize,
    pub mean_ms: Option<f64>,
    /// `1 / mean frame time`.
    pub fps: Option<f64>,
}

impl FpsSummary {
    fn of<'a>(times: impl Iterator<Item = &'a Duration>) -> Self {
        let secs: Vec<f64> = times.map(Duration::as_secs_f64).collect();
        let mean = (!secs.is_empty()).then(|| secs.iter().sum::<f64>() / secs.len() as f64);
        Self {
            frames: secs.len(),
            mean_ms: mean.map(|m| m * 1e3),
            fps: mean.filter(|&m| m > 0.0).map(|m| 1.0 / m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub all: FpsSummary,
    pub with_detections: FpsSummary,
    pub without_detections: FpsSummary,
    pub median_frame_ms: Option<f64>,
    /// Mean time per stage over frames with at least one detection.
    pub stage_mean_ms: StageArray<Option<f64>>,
    /// Abandoned seeds per failing stage, summed over frames.
    pub seed_failures: StageArray<u64>,
    pub seeds: u64,
    pub abandoned_seeds: u64,
    /// Frames without detections, by the stage that stopped them.
    pub frame_failures: StageArray<u64>,
    /// `frame_failures` as a percentage of all frames.
    pub frame_failure_pct: StageArray<Option<f64>>,
}

pub fn timing_report(results: &[FrameResult]) -> TimingReport {
    let all = FpsSummary::of(results.iter().map(|r| &r.frame_time));
    let with: Vec<&FrameResult> = results.iter().filter(|r| !r.detections.is_empty()).collect();
    let with_detections = FpsSummary::of(with.iter().map(|r| &r.frame_time));
    let without_detections = FpsSummary::of(
        results
            .iter()
            .filter(|r| r.detections.is_empty())
            .map(|r| &r.frame_time),
    );

    let mut sorted: Vec<f64> = results.iter().map(|r| r.frame_time.as_secs_f64() * 1e3).collect();
    sorted.sort_by(f64::total_cmp);
    let median_frame_ms = match sorted.len() {
        0 => None,
        n if n % 2 == 1 => Some(sorted[n / 2]),
        n => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    };

    let stage_mean_ms = std::array::from_fn(|s| {
        (!with.is_empty()).then(|| {
            with.iter().map(|r| r.stage_times[s].as_secs_f64()).sum::<f64>() * 1e3 / with.len() as f64
        })
    });
    let mut seed_failures = [0u64; 5];
    let mut frame_failures = [0u64; 5];
    for r in results {
        for (acc, &f) in seed_failures.iter_mut().zip(&r.stage_failures) {
            *acc += u64::from(f);
        }
        if let Some(s) = r.failure_stage() {
            frame_failures[s.index()] += 1;
        }
    }
    let n = results.len();
    let frame_failure_pct =
        frame_failures.map(|f| (n > 0).then(|| 100.0 * f as f64 / n as f64));
    TimingReport {
        all,
        with_detections,
        without_detections,
        median_frame_ms,
        stage_mean_ms,
        seed_failures,
        seeds: results.iter().map(|r| u64::from(r.seeds)).sum(),
        abandoned_seeds: results.iter().map(|r| u64::from(r.abandoned_seeds())).sum(),
        frame_failures,
        frame_failure_pct,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub schema: String,
    pub subset: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

impl MetricsRow {
    pub fn new(subset: &str, m: &Metrics) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            subset: subset.into(),
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            precision: m.precision(),
            recall: m.recall(),
            precision_defined: m.precision().is_some(),
            recall_defined: m.recall().is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallBinRow {
    pub schema: String,
    pub axis: String,
    pub lo: f64,
    pub hi: f64,
    pub ground_truths: u64,
    pub tp: u64,
    pub recall: Option<f64>,
    pub empty: bool,
}

impl BinnedRecall {
    pub fn rows(&self) -> Vec<RecallBinRow> {
        self.bins
            .iter()
            .map(|b| RecallBinRow {
                schema: REPORT_SCHEMA.into(),
                axis: self.axis.name().into(),
                lo: b.lo,
                hi: b.hi,
                ground_truths: b.metrics.ground_truths(),
                tp: b.metrics.tp,
                recall: b.metrics.recall(),
                empty: b.is_empty(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecallRow {
    pub schema: String,
    pub size_lo: f64,
    pub size_hi: f64,
    pub angle_lo: f64,
    pub angle_hi: f64,
    pub ground_truths: u64,
    pub tp: u64,
    pub recall: Option<f64>,
    pub empty: bool,
}

impl JointRecall {
    pub fn rows(&self) -> Vec<JointRecallRow> {
        let mut out = Vec::new();
        for (i, row) in self.cells.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                out.push(JointRecallRow {
                    schema: REPORT_SCHEMA.into(),
                    size_lo: self.size_edges[i],
                    size_hi: self.size_edges[i + 1],
                    angle_lo: self.angle_edges[j],
                    angle_hi: self.angle_edges[j + 1],
                    ground_truths: m.ground_truths(),
                    tp: m.tp,
                    recall: m.recall(),
                    empty: m.ground_truths() == 0,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerCdfRow {
    pub schema: String,
    pub radius_px: f64,
    pub fraction: Option<f64>,
    pub corners: usize,
}

impl CornerCdf {
    pub fn rows(&self) -> Vec<CornerCdfRow> {
        self.radii
            .iter()
            .zip(&self.fractions)
            .map(|(&r, &f)| CornerCdfRow {
                schema: REPORT_SCHEMA.into(),
                radius_px: r,
                fraction: f,
                corners: self.corners,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub schema: String,
    pub mode: HistogramMode,
    pub lo: i32,
    pub hi: i32,
    pub count: u64,
}

impl ADiffHistogram {
    /// Rows over bins `width` values wide, starting at [`Self::MIN`]; `hi`
    /// is inclusive.
    pub fn rows(&self, width: u32) -> Vec<HistogramRow> {
        let width = width.max(1) as usize;
        self.counts
            .chunks(width)
            .enumerate()
            .map(|(k, c)| {
                let lo = Self::MIN + (k * width) as i32;
                HistogramRow {
                    schema: REPORT_SCHEMA.into(),
                    mode: self.mode,
                    lo,
                    hi: lo + c.len() as i32 - 1,
                    count: c.iter().sum(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpsRow {
    pub schema: String,
    pub subset: String,
    pub frames: usize,
    pub mean_ms: Option<f64>,
    pub fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub schema: String,
    pub stage: String,
    pub mean_ms: Option<f64>,
    pub seed_failures: u64,
    pub frame_failures: u64,
    pub frame_failure_pct: Option<f64>,
}

impl TimingReport {
    pub fn fps_rows(&self) -> Vec<FpsRow> {
        [
            ("all", &self.all),
            ("with_detections", &self.with_detections),
            ("without_detections", &self.without_detections),
        ]
        .into_iter()
        .map(|(name, s)| FpsRow {
            schema: REPORT_SCHEMA.into(),
            subset: name.into(),
            frames: s.frames,
            mean_ms: s.mean_ms,
            fps: s.fps,
        })
        .collect()
    }

    pub fn stage_rows(&self) -> Vec<StageRow> {
        Stage::ALL
            .iter()
            .map(|s| {
                let i = s.index();
                StageRow {
                    schema: REPORT_SCHEMA.into(),
                    stage: s.name().into(),
                    mean_ms: self.stage_mean_ms[i],
                    seed_failures: self.seed_failures[i],
                    frame_failures: self.frame_failures[i],
                    frame_failure_pct: self.frame_failure_pct[i],
                }
            })
            .collect()
    }
}

/// Write rows as CSV with a header line.
pub fn write_csv<W: Write, R: Serialize>(w: W, rows: &[R]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, s: f64) -> Quad {
        Quad::new([
            Point2::new(x, y),
            Point2::new(x + s, y),
            Point2::new(x + s, y + s),
            Point2::new(x, y + s),
        ])
        .unwrap()
    }

    fn det(id: usize, quad: Quad) -> Detection {
        Detection {
            id,
            rotation: 0,
            quad,
            center: quad.center(),
        }
    }

    fn frame(dets: usize, secs_ms: u64, seeds: u32, failures: [u32; 5]) -> FrameResult {
        let mut entries = [seeds; 5];
        for k in 2..5 {
            entries[k] = entries[k - 1] - failures[k - 1];
        }
        FrameResult {
            detections: (0..dets).map(|_| det(0, square(0.0, 0.0, 10.0))).collect(),
            stage_times: [Duration::from_millis(secs_ms) / 5; 5],
            stage_failures: failures,
            stage_entries: entries,
            seeds,
            frame_time: Duration::from_millis(secs_ms),
        }
    }

    #[test]
    fn exact_match_is_tp() {
        let q = square(10.0, 10.0, 50.0);
        let m = match_frame(&[det(3, q)], &[GroundTruth { id: 3, quad: q }], 0.5);
        assert_eq!(m.metrics, Metrics { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(m.metrics.precision(), Some(1.0));
    }

    #[test]
    fn wrong_id_is_fp_and_fn() {
        let g = square(10.0, 10.0, 50.0);
        let d = square(12.0, 12.0, 50.0);
        assert!(quad_iou(&d, &g) > 0.85);
        let m = match_frame(&[det(4, d)], &[GroundTruth { id: 3, quad: g }], 0.5);
        assert_eq!(m.metrics, Metrics { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn missing_detection_is_fn() {
        let m = match_frame(&[], &[GroundTruth { id: 0, quad: square(0.0, 0.0, 5.0) }], 0.5);
        assert_eq!(m.metrics, Metrics { tp: 0, fp: 0, fn_: 1 });
        assert_eq!(m.metrics.precision(), None);
        assert_eq!(m.metrics.recall(), Some(0.0));
    }

    #[test]
    fn greedy_prefers_higher_iou() {
        let g = square(0.0, 0.0, 40.0);
        let near = square(1.0, 0.0, 40.0);
        let far = square(15.0, 0.0, 40.0);
        let m = match_frame(&[det(1, far), det(1, near)], &[GroundTruth { id: 1, quad: g }], 0.5);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].det, 1);
        assert_eq!(m.metrics, Metrics { tp: 1, fp: 1, fn_: 0 });
    }

    #[test]
    fn empty_metrics_are_undefined() {
        let m = Metrics::default();
        assert_eq!((m.precision(), m.recall()), (None, None));
    }

    #[test]
    fn cdf_identity_and_offset() {
        let g = square(10.0, 10.0, 30.0);
        let cdf = corner_error_cdf(&[(g, g)], &[0.0, 1.0, 3.0]);
        assert_eq!(cdf.fractions, vec![Some(1.0); 3]);
        // every corner 2 px off, listed from a different starting corner
        let mut c = square(12.0, 10.0, 30.0).corners;
        c.rotate_left(2);
        let d = Quad::new(c).unwrap();
        let cdf = corner_error_cdf(&[(d, g)], &[1.0, 3.0]);
        assert_eq!(cdf.fractions, vec![Some(0.0), Some(1.0)]);
        assert_eq!(cdf.corners, 4);
        assert_eq!(corner_error_cdf(&[], &[3.0]).fractions, vec![None]);
    }

    fn outcome(size: f64, angle: f64, tp: u64) -> FrameOutcome {
        FrameOutcome {
            tag_size: size,
            viewing_angle: angle,
            preset: "WB".into(),
            metrics: Metrics { tp, fp: 0, fn_: 1 - tp },
        }
    }

    #[test]
    fn binning_partitions_and_flags_empty_bins() {
        let outs: Vec<_> = (0..20).map(|k| outcome(20.0 + 7.0 * k as f64, 0.0, u64::from(k >= 2))).collect();
        let edges = [20.0, 30.0, 60.0, 90.0, 160.0, 200.0];
        let b = bin_recall(&outs, BinAxis::TagSize, &edges).unwrap();
        let total: u64 = b.bins.iter().map(|b| b.metrics.ground_truths()).sum();
        assert_eq!(total, 20);
        // sizes 20 and 27 are forced misses
        assert_eq!(b.bins[0].metrics.recall(), Some(0.0));
        assert!(b.bins[4].is_empty());
        assert_eq!(b.bins[4].metrics.recall(), None);
        assert_eq!(b.rows().len(), 5);
        assert!(bin_recall(&outs, BinAxis::TagSize, &[1.0]).is_err());
        assert!(bin_recall(&outs, BinAxis::TagSize, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn joint_bins_sum_to_total() {
        let outs: Vec<_> = (0..30)
            .map(|k| outcome(20.0 + 4.0 * k as f64, 10.0 * (k % 9) as f64, 1))
            .collect();
        let j = bin_recall_joint(&outs, &[20.0, 60.0, 140.0], &[0.0, 40.0, 80.0]).unwrap();
        let n: u64 = j.cells.iter().flatten().map(Metrics::ground_truths).sum();
        assert_eq!(n, 30);
        assert_eq!(j.rows().len(), 4);
    }

    #[test]
    fn uniform_image_histogram() {
        let img = RgbImage::from_pixel(40, 20, image::Rgb([90, 140, 30]));
        let h = adiff_histogram(&[img], HistogramMode::BackgroundAll, None, 4, &LabLookup::Direct).unwrap();
        // 5 rows, 9 pairs each
        assert_eq!(h.total(), 45);
        assert_eq!(h.count(0), 45);
        assert_eq!(h.fraction_above(0), Some(0.0));
    }

    #[test]
    fn tag_mode_needs_masks() {
        let img = RgbImage::new(8, 8);
        let r = adiff_histogram(&[img], HistogramMode::TagRegionMax, None, 1, &LabLookup::Direct);
        assert!(r.is_err());
    }

    #[test]
    fn histogram_rows_rebin() {
        let mut h = ADiffHistogram::empty(HistogramMode::BackgroundAll);
        h.push(-255);
        h.push(0);
        h.push(255);
        let rows = h.rows(5);
        assert_eq!(rows.iter().map(|r| r.count).sum::<u64>(), 3);
        assert_eq!(rows.last().unwrap().hi, 255);
        assert_eq!(h.count_above(0), 1);
    }

    #[test]
    fn fps_arithmetic() {
        let r = timing_report(&[frame(1, 2, 1, [0; 5]), frame(1, 2, 1, [0; 5])]);
        assert!((r.all.fps.unwrap() - 500.0).abs() < 1e-9);
        assert_eq!(r.median_frame_ms, Some(2.0));
    }

    #[test]
    fn fps_subsets_and_accounting() {
        let frames = [frame(1, 2, 3, [0, 1, 1, 0, 0]), frame(0, 1, 2, [0, 2, 0, 0, 0])];
        let r = timing_report(&frames);
        assert_eq!(r.with_detections.frames, 1);
        assert!((r.with_detections.fps.unwrap() - 500.0).abs() < 1e-9);
        assert!((r.without_detections.fps.unwrap() - 1000.0).abs() < 1e-9);
        assert_eq!(r.seed_failures.iter().sum::<u64>(), r.abandoned_seeds);
        assert_eq!(r.frame_failures[Stage::InitialScan.index()], 1);
        assert_eq!(r.frame_failure_pct[Stage::InitialScan.index()], Some(50.0));
        assert_eq!(r.stage_rows().len(), 5);
        assert_eq!(r.fps_rows().len(), 3);
    }

    #[test]
    fn csv_has_schema_column() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[MetricsRow::new("all", &Metrics { tp: 2, fp: 0, fn_: 1 })]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("schema,subset,tp,fp,fn,precision,recall"));
        assert!(text.contains(REPORT_SCHEMA));
    }
}
