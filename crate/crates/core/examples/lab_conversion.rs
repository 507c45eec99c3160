//! Convert the tag palette to scaled LAB and compare the memoized table
//! against direct conversion.
//!
//! `cargo run --example lab_conversion`

use chromatag::colorspace::{a_diff, rgb_to_lab, LabTable, RgbPixel};
use chromatag::taggen::{validate_palette, TagPalette};

fn main() {
    let p = TagPalette::default();
    let named = [
        ("red0", p.red0),
        ("red1", p.red1),
        ("green0", p.green0),
        ("green1", p.green1),
        ("black", p.black),
        ("white", p.white),
    ];
    println!("{:<8} {:>15} {:>15}", "color", "rgb", "scaled lab");
    for (name, c) in named {
        let lab = rgb_to_lab(c);
        println!(
            "{name:<8} {:>15} {:>15}",
            format!("({},{},{})", c.r, c.g, c.b),
            format!("({},{},{})", lab.l, lab.a, lab.b)
        );
    }
    println!(
        "A step from green0 to red0: {}",
        a_diff(rgb_to_lab(p.red0), rgb_to_lab(p.green0))
    );
    match validate_palette(&p) {
        Ok(()) => println!("palette constraints hold"),
        Err(v) => v.iter().for_each(|v| println!("violation: {v}")),
    }

    let table = LabTable::new();
    let mut mismatches = 0;
    for r in (0..=255).step_by(3) {
        for g in (0..=255).step_by(3) {
            for b in (0..=255).step_by(3) {
                let c = RgbPixel::new(r, g, b);
                mismatches += usize::from(table.get(c) != rgb_to_lab(c));
            }
        }
    }
    // a second pass is served from the table
    let before = table.computations();
    table.get(RgbPixel::new(0, 0, 0));
    println!(
        "table vs direct mismatches: {mismatches}; conversions computed: {before}; after a repeat lookup: {}",
        table.computations()
    );
}
