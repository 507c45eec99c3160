//! A-channel differences on natural photographs versus on tags: the
//! statistic behind the seed threshold.
//!
//! `cargo run --release --example adiff_histogram`

use chromatag::codec::TagFamily;
use chromatag::colorspace::LabLookup;
use chromatag::eval::{adiff_histogram, HistogramMode};
use chromatag::synth::{bundled_backgrounds_dir, generate_sweep, load_backgrounds, SweepSpec};
use chromatag::taggen::TagPalette;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lab = LabLookup::default();
    let backgrounds = load_backgrounds(&bundled_backgrounds_dir())?;
    let bg = adiff_histogram(&backgrounds, HistogramMode::BackgroundAll, None, 4, &lab)?;
    println!("background samples: {}", bg.total());
    for t in [10, 15, 20, 25, 30] {
        println!("  fraction with A rise > {t}: {:.5}", bg.fraction_above(t).unwrap_or(0.0));
    }

    let spec = SweepSpec {
        tag_sizes: vec![30.0, 60.0, 120.0],
        viewing_angles: vec![0.0, 40.0, 70.0],
        ids_per_cell: 2,
        seed: 5,
        ..Default::default()
    };
    let frames = generate_sweep(&spec, &TagFamily::tag16h5(), &TagPalette::default(), &backgrounds)?;
    let images: Vec<_> = frames.iter().map(|f| f.image.clone()).collect();
    let masks: Vec<_> = frames.iter().map(|f| f.gt_quad).collect();
    let tags = adiff_histogram(&images, HistogramMode::TagRegionMax, Some(&masks), 4, &lab)?;
    println!("tag frames: {}", tags.total());
    println!("  fraction with max A rise > 25: {:.3}", tags.fraction_above(25).unwrap_or(0.0));
    let lo = tags.nonzero().next().map(|(v, _)| v);
    println!("  smallest per-frame maximum: {lo:?}");
    Ok(())
}
