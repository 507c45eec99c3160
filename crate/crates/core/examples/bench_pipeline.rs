//! Time the detector on tagged and tagless 752x480 frames and print the
//! FPS split and per-stage breakdown.
//!
//! `cargo run --release --example bench_pipeline`

use chromatag::cli::print_timing;
use chromatag::codec::{build_signature_table, TagFamily};
use chromatag::detector::{Detector, DetectorParams};
use chromatag::eval::timing_report;
use chromatag::synth::{bundled_backgrounds_dir, load_backgrounds, plan_sweep, render_plan, render_tagless, SweepSpec};
use chromatag::taggen::TagPalette;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = TagFamily::tag16h5();
    let backgrounds = load_backgrounds(&bundled_backgrounds_dir())?;
    let spec = SweepSpec {
        tag_sizes: vec![70.0, 100.0, 130.0],
        viewing_angles: vec![0.0, 30.0],
        ids_per_cell: 2,
        seed: 3,
        ..Default::default()
    };
    let plans = plan_sweep(&spec, family.len(), backgrounds.len())?;
    let mut images = Vec::new();
    for plan in &plans {
        images.push(render_plan(plan, &family, &TagPalette::default(), &backgrounds, &spec)?.image);
        images.push(render_tagless(plan, &backgrounds, &spec)?);
    }

    let detector = Detector::new(DetectorParams::default(), build_signature_table(&family))?;
    for img in &images {
        detector.detect(img);
    }
    let mut results = Vec::new();
    for _ in 0..20 {
        for img in &images {
            results.push(detector.detect(img));
        }
    }
    print_timing(&timing_report(&results), std::io::stdout().lock())?;
    Ok(())
}
