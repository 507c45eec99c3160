//! Inspect the filtered 16h5 family and its rotation signature table.
//!
//! `cargo run --example codec_table`

use chromatag::codec::{
    build_signature_table, decode_bits, min_rotational_hamming, parse_family_file, rotate_k,
    CellRegion, TagFamily, TagLayout, TAG16H5_DATA,
};

fn main() {
    let raw = parse_family_file(TAG16H5_DATA).expect("embedded family");
    let family = TagFamily::tag16h5();
    let table = build_signature_table(&family);
    println!("raw codes: {}", raw.len());
    println!("codes with both shades in both regions: {}", family.len());
    println!(
        "signature entries: {} (dropped self-symmetric ids: {:?})",
        table.len(),
        table.dropped()
    );
    println!(
        "minimum Hamming distance over rotations: {:?}",
        min_rotational_hamming(&family.codes)
    );

    let layout = TagLayout;
    println!(
        "red mask {:#06x}, green mask {:#06x}",
        layout.region_mask(CellRegion::Red),
        layout.region_mask(CellRegion::Green)
    );
    for id in 0..3 {
        let code = family.code(id).unwrap();
        println!("id {id}: code {code:#06x}");
        for row in 0..4 {
            let cells: String = (0..4)
                .map(|col| {
                    let bit = layout.bit(code, row, col);
                    match layout.region(row, col) {
                        CellRegion::Red => if bit { 'R' } else { 'r' },
                        CellRegion::Green => if bit { 'G' } else { 'g' },
                    }
                })
                .collect();
            println!("    {cells}");
        }
    }

    // every rotation of every code decodes back to its id
    let mut ok = 0;
    for id in 0..family.len() {
        for k in 0..4 {
            let word = rotate_k(family.code(id).unwrap(), k);
            if decode_bits(word, &table) == Some((id, k)) {
                ok += 1;
            }
        }
    }
    println!("round trips: {ok}/{}", family.len() * 4);
}
