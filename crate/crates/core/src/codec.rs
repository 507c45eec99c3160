//! Code families, the cell layout, and rotation-closed signature lookup.
//!
//! A code is a 16-bit word over a 4x4 cell grid, read in the AprilTag 16h5
//! bit order (most significant bit first), so that a quarter turn of the grid
//! is a 4-bit cyclic shift of the word and the family keeps its published
//! rotational Hamming distance. The central 2x2 cells are painted in
//! the red shades and the surrounding 12-cell ring in the green shades; a
//! set bit selects the high-B shade.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// The 16h5 code table shipped with the crate.
pub const TAG16H5_DATA: &str = include_str!("../data/tag16h5.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellRegion {
    Red,
    Green,
}

/// The fixed 4x4 bit-to-cell mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TagLayout;

impl TagLayout {
    pub const GRID_SIDE: usize = 4;
    pub const BITS: usize = 16;

    pub fn region(&self, row: usize, col: usize) -> CellRegion {
        if (1..=2).contains(&row) && (1..=2).contains(&col) {
            CellRegion::Red
        } else {
            CellRegion::Green
        }
    }

    /// Cell `(row, col)` of each bit, most significant first.
    const CELLS: [(u8, u8); 16] = [
        (0, 0), (0, 1), (0, 2), (1, 1),
        (0, 3), (1, 3), (2, 3), (1, 2),
        (3, 3), (3, 2), (3, 1), (2, 2),
        (3, 0), (2, 0), (1, 0), (2, 1),
    ];

    /// Canonical bit index (0 = most significant) of a cell.
    pub fn bit_index(&self, row: usize, col: usize) -> usize {
        Self::CELLS
            .iter()
            .position(|&(r, c)| (usize::from(r), usize::from(c)) == (row, col))
            .expect("cell outside the 4x4 grid")
    }

    pub fn cell_of_bit(&self, index: usize) -> (usize, usize) {
        let (r, c) = Self::CELLS[index];
        (usize::from(r), usize::from(c))
    }

    /// Mask of the word bit for a cell.
    #[inline]
    pub fn cell_mask(&self, row: usize, col: usize) -> u16 {
        1 << (Self::BITS - 1 - self.bit_index(row, col))
    }

    pub fn bit(&self, code: u16, row: usize, col: usize) -> bool {
        code & self.cell_mask(row, col) != 0
    }

    pub fn region_mask(&self, region: CellRegion) -> u16 {
        let mut mask = 0;
        for row in 0..Self::GRID_SIDE {
            for col in 0..Self::GRID_SIDE {
                if self.region(row, col) == region {
                    mask |= self.cell_mask(row, col);
                }
            }
        }
        mask
    }

    /// Both shades present in both regions.
    pub fn is_bimodal(&self, code: u16) -> bool {
        [CellRegion::Red, CellRegion::Green].iter().all(|&r| {
            let mask = self.region_mask(r);
            let set = code & mask;
            set != 0 && set != mask
        })
    }
}

/// Rotate the cell grid 90 degrees clockwise.
pub fn rotate90(code: u16) -> u16 {
    let layout = TagLayout;
    let mut out = 0;
    for row in 0..4 {
        for col in 0..4 {
            // new(r, c) = old(3 - c, r)
            if layout.bit(code, 3 - col, row) {
                out |= layout.cell_mask(row, col);
            }
        }
    }
    out
}

/// Apply [`rotate90`] `k` times.
pub fn rotate_k(code: u16, k: u8) -> u16 {
    (0..k % 4).fold(code, |c, _| rotate90(c))
}

/// Parse a family file: one hexadecimal code per line, `#` starts a comment.
pub fn parse_family_file(text: &str) -> Result<Vec<u16>> {
    let mut codes = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let digits = line
            .strip_prefix("0x")
            .or_else(|| line.strip_prefix("0X"))
            .unwrap_or(line);
        let code = u16::from_str_radix(digits, 16).map_err(|_| Error::FamilyParse {
            line: n + 1,
            text: raw.to_string(),
        })?;
        codes.push(code);
    }
    Ok(codes)
}

/// An ordered code list; a code's position is its tag id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagFamily {
    pub name: String,
    pub codes: Vec<u16>,
    pub min_hamming: u32,
    pub layout: TagLayout,
}

impl TagFamily {
    /// The filtered, densely re-indexed 16h5 family.
    pub fn tag16h5() -> Self {
        let raw = parse_family_file(TAG16H5_DATA).expect("embedded family file parses");
        filter_family("16h5", &raw, 5).expect("embedded family has valid codes")
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn code(&self, id: usize) -> Result<u16> {
        self.codes.get(id).copied().ok_or(Error::InvalidId {
            id,
            size: self.codes.len(),
        })
    }
}

/// Keep only codes with both shades in both color regions. Survivors are
/// re-indexed densely in input order.
pub fn filter_family(name: &str, raw_codes: &[u16], min_hamming: u32) -> Result<TagFamily> {
    let layout = TagLayout;
    let codes: Vec<u16> = raw_codes
        .iter()
        .copied()
        .filter(|&c| layout.is_bimodal(c))
        .collect();
    if codes.is_empty() {
        return Err(Error::FamilyExhausted);
    }
    Ok(TagFamily {
        name: name.to_string(),
        codes,
        min_hamming,
        layout,
    })
}

/// Every rotation of every family code, mapped to `(id, rotation)`.
#[derive(Debug, Clone, Default)]
pub struct SignatureTable {
    entries: HashMap<u16, (usize, u8)>,
    dropped: Vec<usize>,
}

impl SignatureTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ids removed because one of their rotations collided with an earlier id.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn contains(&self, word: u16) -> bool {
        self.entries.contains_key(&word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, (usize, u8))> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

pub fn build_signature_table(family: &TagFamily) -> SignatureTable {
    let mut table = SignatureTable::default();
    for (id, &code) in family.codes.iter().enumerate() {
        let rotations: Vec<u16> = (0..4).map(|k| rotate_k(code, k)).collect();
        let collides = rotations.iter().any(|w| table.entries.contains_key(w));
        // A code whose own rotations coincide (rotational symmetry) cannot
        // report a unique rotation either.
        let self_symmetric = (1..4).any(|k| rotations[k] == rotations[0]);
        if collides || self_symmetric {
            log::warn!(
                "family {}: dropping id {id} (code {code:#06x}) after signature collision",
                family.name
            );
            table.dropped.push(id);
            continue;
        }
        for (k, w) in rotations.into_iter().enumerate() {
            table.entries.insert(w, (id, k as u8));
        }
    }
    table
}

/// Exact-match lookup; `None` is an ordinary miss.
#[inline]
pub fn decode_bits(bits: u16, table: &SignatureTable) -> Option<(usize, u8)> {
    table.entries.get(&bits).copied()
}

/// Smallest Hamming distance between any two codes, over all rotations.
pub fn min_rotational_hamming(codes: &[u16]) -> Option<u32> {
    let mut best: Option<u32> = None;
    for (i, &a) in codes.iter().enumerate() {
        for (j, &b) in codes.iter().enumerate() {
            for k in 0..4 {
                if i == j && k == 0 {
                    continue;
                }
                let d = (a ^ rotate_k(b, k)).count_ones();
                best = Some(best.map_or(d, |m| m.min(d)));
            }
        }
    }
    best
}
