//! Uniform local binary patterns (P = 8, R = 1).
//!
//! Neighbours are visited counter-clockwise starting from the right-hand
//! pixel; neighbour `p` contributes bit `2^p`:
//!
//! ```text
//! 3 2 1
//! 4 c 0
//! 5 6 7
//! ```
//!
//! By default a bit is set when the centre is strictly brighter than the
//! neighbour (`g_c - g_p > 0`). `classic_sign` switches to the textbook rule
//! `g_p - g_c >= 0`. Codes fold into 59 bins: the 58 patterns with at most two
//! circular 0/1 transitions in ascending code order, then one catch-all bin.
//! Cells tile the image from the top-left corner; incomplete cells at the
//! right and bottom edges are dropped.

use std::sync::OnceLock;

use crate::descriptor::{Descriptor, FeatureVector};
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const LBP_BINS: usize = 59;

/// (column, row) offsets in bit order.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LbpOptions {
    pub classic_sign: bool,
}

/// Circular 0/1 transitions in an 8-bit pattern.
pub fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

pub fn is_uniform(code: u8) -> bool {
    transitions(code) <= 2
}

fn bin_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0u8; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            table[code as usize] = if is_uniform(code) {
                next += 1;
                next - 1
            } else {
                (LBP_BINS - 1) as u8
            };
        }
        table
    })
}

/// Histogram bin of an 8-bit pattern.
pub fn uniform_bin(code: u8) -> usize {
    bin_table()[code as usize] as usize
}

/// Pattern of one centre value against its eight neighbours (bit order).
pub fn lbp_code(center: u8, neighbors: &[u8; 8], opts: LbpOptions) -> u8 {
    neighbors.iter().enumerate().fold(0u8, |acc, (p, &g)| {
        let set = if opts.classic_sign {
            g >= center
        } else {
            center > g
        };
        acc | (u8::from(set) << p)
    })
}

/// Pattern image; border pixels see replicated neighbours.
pub fn lbp_image(img: &GrayImage, opts: LbpOptions) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut codes = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let mut nb = [0u8; 8];
            for (p, &(dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                nb[p] = img.get_clamped(r as isize + dy, c as isize + dx);
            }
            codes.push(lbp_code(img.get(r, c), &nb, opts));
        }
    }
    codes
}

pub fn lbp(img: &GrayImage, cell: usize) -> Result<FeatureVector> {
    lbp_with(img, cell, LbpOptions::default())
}

pub fn lbp_with(img: &GrayImage, cell: usize, opts: LbpOptions) -> Result<FeatureVector> {
    let (w, h) = (img.width(), img.height());
    if cell == 0 || w / cell == 0 || h / cell == 0 {
        return Err(Error::IndivisibleCellSize {
            cell,
            width: w,
            height: h,
        });
    }
    let (ncx, ncy) = (w / cell, h / cell);
    let codes = lbp_image(img, opts);
    let mut out = Vec::with_capacity(ncx * ncy * LBP_BINS);
    for cy in 0..ncy {
        for cx in 0..ncx {
            let mut hist = [0.0f64; LBP_BINS];
            for r in cy * cell..(cy + 1) * cell {
                for c in cx * cell..(cx + 1) * cell {
                    hist[uniform_bin(codes[r * w + c])] += 1.0;
                }
            }
            let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
            out.extend(hist.iter().map(|v| v / norm));
        }
    }
    Ok(FeatureVector::new(Descriptor::Lbp { cell }, out))
}
