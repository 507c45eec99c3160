//! Tag rendering with exact canonical geometry.
//!
//! Canonical frame: one unit per code cell, origin at the tag center, y down.
//! The red region spans `[-1, 1]`, the code grid `[-2, 2]`, the black ring
//! `[-3, 3]` and the white ring `[-4, 4]`, so a tag is 8 cells on a side and
//! the localization square (black/white boundary) has corners at `(±3, ±3)`.

use std::fmt;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::codec::{rotate_k, CellRegion, TagFamily};
use crate::colorspace::{rgb_to_lab, RgbPixel};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Quad};

/// The six tag colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagPalette {
    pub red0: RgbPixel,
    pub red1: RgbPixel,
    pub green0: RgbPixel,
    pub green1: RgbPixel,
    pub black: RgbPixel,
    pub white: RgbPixel,
}

impl Default for TagPalette {
    /// Found by `examples/palette_search.rs`. Shade pairs share A within a
    /// few units (also under the NWB gains) and differ strongly in B; the
    /// high-B shade encodes a 1 bit.
    fn default() -> Self {
        Self {
            red0: RgbPixel::new(220, 70, 255),
            red1: RgbPixel::new(250, 0, 20),
            green0: RgbPixel::new(110, 250, 225),
            green1: RgbPixel::new(40, 125, 0),
            black: RgbPixel::new(0, 0, 0),
            white: RgbPixel::new(255, 255, 255),
        }
    }
}

impl TagPalette {
    /// Color of a code cell for a given bit value.
    pub fn cell_color(&self, region: CellRegion, bit: bool) -> RgbPixel {
        match (region, bit) {
            (CellRegion::Red, false) => self.red0,
            (CellRegion::Red, true) => self.red1,
            (CellRegion::Green, false) => self.green0,
            (CellRegion::Green, true) => self.green1,
        }
    }
}

/// One failed palette constraint with the measured value.
#[derive(Debug, Clone, PartialEq)]
pub struct PaletteViolation {
    pub constraint: &'static str,
    pub measured: f64,
}

impl fmt::Display for PaletteViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (measured {})", self.constraint, self.measured)
    }
}

/// Check every palette constraint in scaled LAB.
pub fn validate_palette(p: &TagPalette) -> std::result::Result<(), Vec<PaletteViolation>> {
    let lab = |c: RgbPixel| {
        let l = rgb_to_lab(c);
        (f64::from(l.l), f64::from(l.a), f64::from(l.b))
    };
    let (r0, r1, g0, g1) = (lab(p.red0), lab(p.red1), lab(p.green0), lab(p.green1));
    let (k, w) = (lab(p.black), lab(p.white));
    let mut out = Vec::new();
    let mut check = |ok: bool, constraint: &'static str, measured: f64| {
        if !ok {
            out.push(PaletteViolation {
                constraint,
                measured,
            });
        }
    };

    let d = (r0.1 - r1.1).abs();
    check(d < 10.0, "red |Δa| < 10", d);
    let d = (r0.2 - r1.2).abs();
    check(d > 40.0, "red |Δb| > 40", d);
    let d = (g0.1 - g1.1).abs();
    check(d < 10.0, "green |Δa| < 10", d);
    let d = (g0.2 - g1.2).abs();
    check(d > 40.0, "green |Δb| > 40", d);
    let sep = [r0.1, r1.1]
        .iter()
        .flat_map(|ra| [g0.1, g1.1].map(|ga| (ra - ga).abs()))
        .fold(f64::INFINITY, f64::min);
    check(sep > 40.0, "red/green |Δa| > 40", sep);
    check((k.1 - 128.0).abs() <= 6.0, "black a within 128±6", k.1);
    check((w.1 - 128.0).abs() <= 6.0, "white a within 128±6", w.1);
    let d = (k.0 - w.0).abs();
    check(d > 100.0, "black/white |ΔL| > 100", d);

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Region half-widths in cell units, measured from the tag center.
pub struct TagGeometry;

impl TagGeometry {
    pub const RED_HALF: f64 = 1.0;
    pub const GREEN_HALF: f64 = 2.0;
    pub const BLACK_HALF: f64 = 3.0;
    pub const WHITE_HALF: f64 = 4.0;
    pub const SIDE_CELLS: u32 = 8;

    /// Black/white boundary corners: top-left, top-right, bottom-right,
    /// bottom-left.
    pub const CANONICAL_CORNERS: [Point2; 4] = [
        Point2::new(-3.0, -3.0),
        Point2::new(3.0, -3.0),
        Point2::new(3.0, 3.0),
        Point2::new(-3.0, 3.0),
    ];

    /// Center of code cell `(row, col)` in canonical coordinates.
    pub fn cell_center(row: usize, col: usize) -> Point2 {
        Point2::new(col as f64 - 1.5, row as f64 - 1.5)
    }
}

/// A rendered tag raster with its ground truth.
#[derive(Debug, Clone)]
pub struct RenderedTag {
    pub image: RgbImage,
    /// Black/white boundary in pixel coordinates.
    pub corners: Quad,
    pub id: usize,
    pub rotation: u8,
    pub px_per_cell: u32,
}

/// Render tag `id` with its code rotated `rotation` quarter turns clockwise.
pub fn render_tag(
    family: &TagFamily,
    id: usize,
    rotation: u8,
    px_per_cell: u32,
    palette: &TagPalette,
) -> Result<RenderedTag> {
    if px_per_cell < 2 {
        return Err(Error::InvalidArgument(format!(
            "px_per_cell must be at least 2, got {px_per_cell}"
        )));
    }
    if rotation > 3 {
        return Err(Error::InvalidArgument(format!(
            "rotation must be 0..=3, got {rotation}"
        )));
    }
    let word = rotate_k(family.code(id)?, rotation);
    let layout = family.layout;
    let side = TagGeometry::SIDE_CELLS * px_per_cell;
    let image = RgbImage::from_fn(side, side, |x, y| {
        let (cx, cy) = ((x / px_per_cell) as i32, (y / px_per_cell) as i32);
        let ring = (cx - 4).max(3 - cx).max(cy - 4).max(3 - cy);
        let color = match ring {
            3 => palette.white,
            2 => palette.black,
            _ => {
                let (row, col) = ((cy - 2) as usize, (cx - 2) as usize);
                palette.cell_color(layout.region(row, col), layout.bit(word, row, col))
            }
        };
        color.into()
    });
    let s = f64::from(px_per_cell);
    let corners = Quad::new(TagGeometry::CANONICAL_CORNERS.map(|c| {
        Point2::new((c.x + TagGeometry::WHITE_HALF) * s, (c.y + TagGeometry::WHITE_HALF) * s)
    }))?;
    Ok(RenderedTag {
        image,
        corners,
        id,
        rotation,
        px_per_cell,
    })
}
