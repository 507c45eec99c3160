//! Closed loop: synthesize a sweep in memory, detect, and score it.
//!
//! `cargo run --release --example evaluate_sweep`

use chromatag::codec::{build_signature_table, TagFamily};
use chromatag::detector::{Detector, DetectorParams};
use chromatag::eval::{
    bin_recall, bin_recall_joint, corner_error_cdf, match_frame, metrics_for_preset, BinAxis,
    FrameOutcome, GroundTruth, Metrics,
};
use chromatag::synth::{bundled_backgrounds_dir, generate_sweep, load_backgrounds, SweepSpec};
use chromatag::taggen::TagPalette;
use rayon::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = TagFamily::tag16h5();
    let spec = SweepSpec {
        tag_sizes: vec![20.0, 30.0, 50.0, 70.0, 100.0, 140.0],
        viewing_angles: vec![0.0, 20.0, 40.0, 60.0, 75.0],
        ids_per_cell: 2,
        seed: 11,
        ..Default::default()
    };
    let frames = generate_sweep(&spec, &family, &TagPalette::default(), &load_backgrounds(&bundled_backgrounds_dir())?)?;
    let detector = Detector::new(DetectorParams::default(), build_signature_table(&family))?;

    let scored: Vec<_> = frames
        .par_iter()
        .map(|f| {
            let r = detector.detect(&f.image);
            let m = match_frame(&r.detections, &[GroundTruth { id: f.gt_id, quad: f.gt_quad }], 0.5);
            let pairs: Vec<_> = m.pairs.iter().map(|p| (r.detections[p.det].quad, f.gt_quad)).collect();
            let outcome = FrameOutcome {
                tag_size: f.tag_size,
                viewing_angle: f.viewing_angle,
                preset: f.preset.clone(),
                metrics: m.metrics,
            };
            (outcome, pairs)
        })
        .collect();
    let outcomes: Vec<FrameOutcome> = scored.iter().map(|s| s.0.clone()).collect();
    let pairs: Vec<_> = scored.iter().flat_map(|s| s.1.clone()).collect();

    let total: Metrics = outcomes.iter().map(|o| o.metrics).sum();
    println!("{} frames: {:?}", outcomes.len(), total);
    println!("precision {:?} recall {:?}", total.precision(), total.recall());
    for p in ["WB", "NWB"] {
        println!("recall {p}: {:?}", metrics_for_preset(&outcomes, p).recall());
    }
    let cdf = corner_error_cdf(&pairs, &[1.0, 2.0, 3.0, 5.0]);
    for (r, f) in cdf.radii.iter().zip(&cdf.fractions) {
        println!("corners within {r} px: {f:?}");
    }
    for b in bin_recall(&outcomes, BinAxis::TagSize, &[15.0, 25.0, 40.0, 60.0, 85.0, 120.0, 160.0])?.bins {
        println!("size [{:>5}, {:>5}) recall {:?}", b.lo, b.hi, b.metrics.recall());
    }
    let joint = bin_recall_joint(&outcomes, &[15.0, 40.0, 85.0, 160.0], &[-5.0, 30.0, 50.0, 80.0])?;
    println!("joint recall (rows: size, columns: angle)");
    for (i, row) in joint.cells.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .map(|m| m.recall().map_or("  -  ".into(), |r| format!("{r:.2}")))
            .collect();
        println!("  [{:>3}, {:>3})  {}", joint.size_edges[i], joint.size_edges[i + 1], cells.join("  "));
    }
    Ok(())
}
