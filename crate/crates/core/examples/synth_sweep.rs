//! Render a small synthetic sweep to disk with a JSON-lines manifest.
//!
//! `cargo run --release --example synth_sweep -- [out_dir]`

use std::io::Write;

use chromatag::codec::TagFamily;
use chromatag::synth::{
    bundled_backgrounds_dir, generate_sweep, load_backgrounds, ManifestRecord, PhotometricPreset,
    SweepSpec,
};
use chromatag::taggen::TagPalette;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synth_out".into()));
    std::fs::create_dir_all(&out)?;
    let spec = SweepSpec {
        tag_sizes: vec![40.0, 80.0, 120.0],
        viewing_angles: vec![0.0, 30.0, 60.0],
        presets: vec![PhotometricPreset::wb(), PhotometricPreset::nwb()],
        ids_per_cell: 1,
        seed: 7,
        ..Default::default()
    };
    let backgrounds = load_backgrounds(&bundled_backgrounds_dir())?;
    let frames = generate_sweep(&spec, &TagFamily::tag16h5(), &TagPalette::default(), &backgrounds)?;
    let mut manifest = std::fs::File::create(out.join("manifest.jsonl"))?;
    for (k, f) in frames.iter().enumerate() {
        let name = format!("frame_{k:03}.png");
        f.image.save(out.join(&name))?;
        writeln!(manifest, "{}", serde_json::to_string(&ManifestRecord::new(f, &name))?)?;
        println!(
            "{name}: id {:>2} size {:>5.1} px angle {:>4.1} deg {}",
            f.gt_id, f.tag_size, f.viewing_angle, f.preset
        );
    }
    println!("wrote {} frames to {}", frames.len(), out.display());
    Ok(())
}
