//! Histogram of oriented gradients.
//!
//! Centred `[-1 0 1]` derivatives (replicated border), unsigned orientation in
//! [0°, 180°), nine bins centred at 0°, 20°, …, 160° with linear vote splitting
//! between the two nearest centres. Cells are grouped into 2x2 blocks with a
//! stride of one cell; each 36-value block is L2-normalized.

use crate::descriptor::{Descriptor, FeatureVector};
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const HOG_BINS: usize = 9;
const BLOCK_CELLS: usize = 2;
const EPSILON: f64 = 1e-5;

pub fn hog(img: &GrayImage, cell: usize) -> Result<FeatureVector> {
    let (w, h) = (img.width(), img.height());
    if cell == 0 || w % cell != 0 || h % cell != 0 {
        return Err(Error::IndivisibleCellSize {
            cell,
            width: w,
            height: h,
        });
    }
    let (ncx, ncy) = (w / cell, h / cell);
    if ncx < BLOCK_CELLS || ncy < BLOCK_CELLS {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: BLOCK_CELLS * cell,
        });
    }

    let mut cells = vec![[0.0f64; HOG_BINS]; ncx * ncy];
    for r in 0..h {
        for c in 0..w {
            let (ri, ci) = (r as isize, c as isize);
            let gx = f64::from(img.get_clamped(ri, ci + 1)) - f64::from(img.get_clamped(ri, ci - 1));
            let gy = f64::from(img.get_clamped(ri + 1, ci)) - f64::from(img.get_clamped(ri - 1, ci));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            let pos = angle / 20.0;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = lo as usize % HOG_BINS;
            let hi = (lo + 1) % HOG_BINS;
            let hist = &mut cells[(r / cell) * ncx + c / cell];
            hist[lo] += mag * (1.0 - frac);
            hist[hi] += mag * frac;
        }
    }

    let (nbx, nby) = (ncx - BLOCK_CELLS + 1, ncy - BLOCK_CELLS + 1);
    let mut out = Vec::with_capacity(nbx * nby * BLOCK_CELLS * BLOCK_CELLS * HOG_BINS);
    for by in 0..nby {
        for bx in 0..nbx {
            let start = out.len();
            for cy in by..by + BLOCK_CELLS {
                for cx in bx..bx + BLOCK_CELLS {
                    out.extend_from_slice(&cells[cy * ncx + cx]);
                }
            }
            let block = &mut out[start..];
            let norm = (block.iter().map(|v| v * v).sum::<f64>() + EPSILON * EPSILON).sqrt();
            block.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(FeatureVector::new(Descriptor::Hog { cell }, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, max: u8) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(40, 40, |_, _| rng.random_range(0..=max)).unwrap()
    }

    #[test]
    fn lengths_for_40x40() {
        let img = random_image(0, 255);
        assert_eq!(hog(&img, 8).unwrap().len(), 576);
        assert_eq!(hog(&img, 10).unwrap().len(), 324);
    }

    #[test]
    fn indivisible_cells_are_rejected() {
        let img = random_image(0, 255);
        assert!(matches!(hog(&img, 16), Err(Error::IndivisibleCellSize { .. })));
        assert!(matches!(hog(&img, 0), Err(Error::IndivisibleCellSize { .. })));
        assert!(matches!(hog(&img, 40), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn constant_image_gives_zero_vector() {
        let f = hog(&GrayImage::filled(40, 40, 99).unwrap(), 8).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn horizontal_ramp_votes_bin_zero() {
        let img = GrayImage::from_fn(16, 16, |_, c| (c * 10) as u8).unwrap();
        let f = hog(&img, 8).unwrap();
        // one block; every cell's mass sits in bin 0
        for cell in 0..4 {
            let hist = &f.values()[cell * 9..cell * 9 + 9];
            assert!(hist[0] > 0.0);
            assert!(hist[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn votes_split_linearly_between_bins() {
        // gx = gy everywhere in the interior → 45°, split 3/4 to 40° and 1/4 to 60°.
        // Cell (1, 1) of a 24x24 image never touches the border; it is the
        // last cell of the first block.
        let img = GrayImage::from_fn(24, 24, |r, c| (r * 5 + c * 5) as u8).unwrap();
        let f = hog(&img, 8).unwrap();
        let hist = &f.values()[27..36];
        assert!(hist[0..2].iter().chain(&hist[4..]).all(|&v| v == 0.0));
        assert!((hist[2] / hist[3] - 3.0).abs() < 1e-9, "{hist:?}");
    }

    #[test]
    fn gain_invariance_and_block_norms() {
        for seed in 0..5 {
            let img = random_image(seed, 127);
            let doubled = img.map(|v| v * 2);
            let a = hog(&img, 8).unwrap();
            let b = hog(&doubled, 8).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-9);
            }
            for block in a.values().chunks(36) {
                let n = block.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(n <= 1.0 + 1e-9);
            }
        }
    }
}
