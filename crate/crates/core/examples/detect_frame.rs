//! Detect tags in an image, or in a generated two-tag scene when no path is
//! given.
//!
//! `cargo run --release --example detect_frame -- [image]`

use chromatag::codec::{build_signature_table, TagFamily};
use chromatag::detector::{Detector, DetectorParams, Stage};
use chromatag::taggen::{render_tag, TagPalette};
use image::{imageops, Rgb, RgbImage};

fn demo_scene(family: &TagFamily) -> chromatag::Result<RgbImage> {
    let mut img = RgbImage::from_pixel(640, 400, Rgb([120, 118, 110]));
    let p = TagPalette::default();
    imageops::replace(&mut img, &render_tag(family, 4, 1, 14, &p)?.image, 60, 100);
    imageops::replace(&mut img, &render_tag(family, 17, 3, 20, &p)?.image, 360, 90);
    Ok(img)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = TagFamily::tag16h5();
    let image = match std::env::args().nth(1) {
        Some(path) => image::open(path)?.to_rgb8(),
        None => demo_scene(&family)?,
    };
    let detector = Detector::new(DetectorParams::default(), build_signature_table(&family))?;
    detector.detect(&image); // warm the LAB table
    let r = detector.detect(&image);

    println!("{} detection(s), {} seed(s), {:?}", r.detections.len(), r.seeds, r.frame_time);
    for d in &r.detections {
        let c: Vec<String> = d.quad.corners.iter().map(|c| format!("({:.1},{:.1})", c.x, c.y)).collect();
        println!("  id {:>2} rotation {} corners {}", d.id, d.rotation, c.join(" "));
    }
    for s in Stage::ALL {
        println!(
            "  {:<13} {:>9.3} ms  {} abandoned",
            s.name(),
            r.stage_times[s.index()].as_secs_f64() * 1e3,
            r.stage_failures[s.index()]
        );
    }
    Ok(())
}
