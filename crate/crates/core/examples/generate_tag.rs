//! Render a tag and save it as PNG.
//!
//! `cargo run --example generate_tag -- [id] [rotation] [px_per_cell] [out.png]`

use chromatag::codec::TagFamily;
use chromatag::taggen::{render_tag, TagPalette};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let id: usize = arg(0, "0").parse()?;
    let rotation: u8 = arg(1, "0").parse()?;
    let ppc: u32 = arg(2, "16").parse()?;
    let out = arg(3, "tag.png");

    let family = TagFamily::tag16h5();
    let tag = render_tag(&family, id, rotation, ppc, &TagPalette::default())?;
    tag.image.save(&out)?;
    println!(
        "wrote {out}: {}x{} px, id {id}, rotation {rotation}",
        tag.image.width(),
        tag.image.height()
    );
    for (name, c) in ["top-left", "top-right", "bottom-right", "bottom-left"]
        .iter()
        .zip(tag.corners.corners)
    {
        println!("  {name:<13} ({:.1}, {:.1})", c.x, c.y);
    }
    Ok(())
}
