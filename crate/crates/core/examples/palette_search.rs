//! Search the sRGB grid for the two red and two green shades.
//!
//! A shade pair must agree in A within 1.5 under both the WB and NWB
//! presets, differ in B by more than 45 under WB, and keep A monotone (within
//! 2 units) along the RGB blend between the two shades, since blurred cell
//! boundaries must not look like a red/green border. Among the survivors the
//! pair with the largest B separation under NWB wins.
//!
//! Run with `cargo run --release --example palette_search`.

use chromatag::colorspace::{rgb_to_lab_f64, RgbPixel};
use chromatag::synth::PhotometricPreset;
use chromatag::taggen::{validate_palette, TagPalette};

const STEP: usize = 5;
const A_TOL: f64 = 1.5;
const MIN_WB_DB: f64 = 45.0;
const MIX_TOL: f64 = 2.0;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Red,
    Green,
}

struct Color {
    rgb: RgbPixel,
    wb: [f64; 3],
    nwb: [f64; 3],
}

fn scaled_lab(rgb: [f64; 3], gains: [f64; 3]) -> [f64; 3] {
    let ch = |k: usize| (rgb[k] * gains[k]).round().clamp(0.0, 255.0) as u8;
    let [l, a, b] = rgb_to_lab_f64(RgbPixel::new(ch(0), ch(1), ch(2)));
    [l * 2.55, a + 128.0, b + 128.0]
}

/// Worst A excursion beyond the endpoints along the blend of two shades.
fn mix_excursion(kind: Kind, c0: RgbPixel, c1: RgbPixel, presets: &[[f64; 3]]) -> f64 {
    let (p, q) = (
        [c0.r, c0.g, c0.b].map(f64::from),
        [c1.r, c1.g, c1.b].map(f64::from),
    );
    let mut worst = 0.0f64;
    for &g in presets {
        let a: Vec<f64> = (0..=10)
            .map(|k| {
                let t = f64::from(k) / 10.0;
                scaled_lab(std::array::from_fn(|c| (1.0 - t) * p[c] + t * q[c]), g)[1]
            })
            .collect();
        let (lo, hi) = a.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let (e0, e1) = (a[0], a[10]);
        worst = worst.max(match kind {
            Kind::Red => e0.min(e1) - lo,
            Kind::Green => hi - e0.max(e1),
        });
    }
    worst
}

fn search(kind: Kind, colors: &[Color], presets: &[[f64; 3]]) -> Option<(RgbPixel, RgbPixel, f64, f64)> {
    let mut pool: Vec<&Color> = colors
        .iter()
        .filter(|c| match kind {
            Kind::Red => c.wb[1] >= 170.0 && c.nwb[1] >= 170.0,
            Kind::Green => c.wb[1] <= 100.0 && c.nwb[1] <= 100.0,
        })
        .collect();
    pool.sort_by(|x, y| x.wb[1].total_cmp(&y.wb[1]));

    // (NWB dB, WB dB, i, j)
    let mut pairs = Vec::new();
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            if pool[j].wb[1] - pool[i].wb[1] > A_TOL {
                break;
            }
            if (pool[j].nwb[1] - pool[i].nwb[1]).abs() > A_TOL {
                continue;
            }
            let db_wb = (pool[j].wb[2] - pool[i].wb[2]).abs();
            if db_wb <= MIN_WB_DB {
                continue;
            }
            pairs.push(((pool[j].nwb[2] - pool[i].nwb[2]).abs(), db_wb, i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.total_cmp(&x.1)));
    pairs
        .into_iter()
        .find(|&(_, _, i, j)| mix_excursion(kind, pool[i].rgb, pool[j].rgb, presets) <= MIX_TOL)
        .map(|(nwb, wb, i, j)| {
            // low-B shade first: it encodes bit 0
            let (lo, hi) = if pool[i].wb[2] <= pool[j].wb[2] { (i, j) } else { (j, i) };
            (pool[lo].rgb, pool[hi].rgb, wb, nwb)
        })
}

fn main() {
    let presets = [PhotometricPreset::wb().gains, PhotometricPreset::nwb().gains];
    let mut levels: Vec<u8> = (0..=255).step_by(STEP).map(|v| v as u8).collect();
    if levels.last() != Some(&255) {
        levels.push(255);
    }
    let mut colors = Vec::with_capacity(levels.len().pow(3));
    for &r in &levels {
        for &g in &levels {
            for &b in &levels {
                let rgb = [r, g, b].map(f64::from);
                colors.push(Color {
                    rgb: RgbPixel::new(r, g, b),
                    wb: scaled_lab(rgb, presets[0]),
                    nwb: scaled_lab(rgb, presets[1]),
                });
            }
        }
    }
    println!("{} grid colors", colors.len());

    let mut found = Vec::new();
    for (kind, name) in [(Kind::Red, "red"), (Kind::Green, "green")] {
        match search(kind, &colors, &presets) {
            Some((c0, c1, wb, nwb)) => {
                println!(
                    "{name}: ({}, {}, {}) / ({}, {}, {})  WB dB {wb:.1}  NWB dB {nwb:.1}",
                    c0.r, c0.g, c0.b, c1.r, c1.g, c1.b
                );
                found.push((c0, c1));
            }
            None => {
                println!("{name}: no pair satisfies the constraints");
                return;
            }
        }
    }
    let palette = TagPalette {
        red0: found[0].0,
        red1: found[0].1,
        green0: found[1].0,
        green1: found[1].1,
        ..TagPalette::default()
    };
    match validate_palette(&palette) {
        Ok(()) => println!("palette passes all constraints"),
        Err(v) => v.iter().for_each(|v| println!("violation: {v}")),
    }
    let shipped = TagPalette::default();
    println!(
        "matches the default palette: {}",
        found[0] == (shipped.red0, shipped.red1) && found[1] == (shipped.green0, shipped.green1)
    );
}
