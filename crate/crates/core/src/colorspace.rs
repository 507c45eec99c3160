//! sRGB to scaled CIELAB conversion.
//!
//! All pipeline stages read pixels as [`LabPixel`]: L mapped onto 0..=255,
//! a/b offset by +128 and clamped, so that 8-bit-scale thresholds apply
//! directly to opponent-channel differences.
//!
//! [`LabTable`] memoizes conversions in a lazily filled, direct-indexed table
//! over the packed 24-bit RGB value. Writes of a slot are idempotent, so
//! concurrent fills need no locking.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

/// An 8-bit sRGB pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RgbPixel {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbPixel {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    #[inline]
    pub fn packed(self) -> u32 {
        (u32::from(self.r) << 16) | (u32::from(self.g) << 8) | u32::from(self.b)
    }
}

impl From<image::Rgb<u8>> for RgbPixel {
    fn from(p: image::Rgb<u8>) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

impl From<RgbPixel> for image::Rgb<u8> {
    fn from(p: RgbPixel) -> Self {
        image::Rgb([p.r, p.g, p.b])
    }
}

/// Scaled CIELAB triple. `a == 128` and `b == 128` are neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LabPixel {
    pub l: u8,
    pub a: u8,
    pub b: u8,
}

// D65 reference white, 2 degree observer.
const WHITE_X: f64 = 0.950_47;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.088_83;

const EPSILON: f64 = 216.0 / 24_389.0; // (6/29)^3
const KAPPA_INV: f64 = 108.0 / 841.0; // 3 (6/29)^2

#[inline]
fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        t / KAPPA_INV + 4.0 / 29.0
    }
}

/// Unscaled CIELAB (L in 0..=100, a/b signed).
pub fn rgb_to_lab_f64(p: RgbPixel) -> [f64; 3] {
    let r = srgb_to_linear(p.r);
    let g = srgb_to_linear(p.g);
    let b = srgb_to_linear(p.b);

    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;

    let fx = lab_f(x / WHITE_X);
    let fy = lab_f(y / WHITE_Y);
    let fz = lab_f(z / WHITE_Z);

    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[inline]
fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Scale an unscaled Lab triple onto the 8-bit convention used everywhere else.
pub fn scale_lab(lab: [f64; 3]) -> LabPixel {
    LabPixel {
        l: clamp_u8(lab[0] * 255.0 / 100.0),
        a: clamp_u8(lab[1].round() + 128.0),
        b: clamp_u8(lab[2].round() + 128.0),
    }
}

/// Direct conversion, no memoization.
pub fn rgb_to_lab(p: RgbPixel) -> LabPixel {
    scale_lab(rgb_to_lab_f64(p))
}

/// Signed A-channel difference `p.a - q.a`.
#[inline]
pub fn a_diff(p: LabPixel, q: LabPixel) -> i32 {
    i32::from(p.a) - i32::from(q.a)
}

const PRESENT: u32 = 1 << 24;

/// Lazily filled conversion table indexed by packed RGB.
pub struct LabTable {
    slots: Box<[AtomicU32]>,
    computed: AtomicU64,
}

impl LabTable {
    pub fn new() -> Self {
        let slots = std::iter::repeat_with(|| AtomicU32::new(0))
            .take(1 << 24)
            .collect::<Vec<_>>()
            .into_boxed_slice();
        Self {
            slots,
            computed: AtomicU64::new(0),
        }
    }

    /// Process-wide shared table.
    pub fn shared() -> Arc<LabTable> {
        static SHARED: OnceLock<Arc<LabTable>> = OnceLock::new();
        SHARED.get_or_init(|| Arc::new(LabTable::new())).clone()
    }

    #[inline]
    pub fn get(&self, p: RgbPixel) -> LabPixel {
        let slot = &self.slots[p.packed() as usize];
        let v = slot.load(Ordering::Relaxed);
        if v & PRESENT != 0 {
            return LabPixel {
                l: (v >> 16) as u8,
                a: (v >> 8) as u8,
                b: v as u8,
            };
        }
        let lab = rgb_to_lab(p);
        self.computed.fetch_add(1, Ordering::Relaxed);
        slot.store(
            PRESENT | (u32::from(lab.l) << 16) | (u32::from(lab.a) << 8) | u32::from(lab.b),
            Ordering::Relaxed,
        );
        lab
    }

    /// Number of conversions actually computed (table misses) so far.
    pub fn computations(&self) -> u64 {
        self.computed.load(Ordering::Relaxed)
    }
}

impl Default for LabTable {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for LabTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LabTable")
            .field("computed", &self.computations())
            .finish_non_exhaustive()
    }
}

/// Memoized conversion through the shared table.
pub fn lab_lut_get(p: RgbPixel) -> LabPixel {
    LabTable::shared().get(p)
}

/// How the detector converts pixels: through a shared table or on demand.
#[derive(Debug, Clone)]
pub enum LabLookup {
    Table(Arc<LabTable>),
    /// Compute on demand; for memory-constrained hosts.
    Direct,
}

impl LabLookup {
    #[inline]
    pub fn convert(&self, p: RgbPixel) -> LabPixel {
        match self {
            LabLookup::Table(t) => t.get(p),
            LabLookup::Direct => rgb_to_lab(p),
        }
    }
}

impl Default for LabLookup {
    fn default() -> Self {
        LabLookup::Table(LabTable::shared())
    }
}
