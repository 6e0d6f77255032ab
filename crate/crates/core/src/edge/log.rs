use std::f64::consts::PI;

use super::convolve::{convolve2d, Border, Kernel2D};
use super::{EdgeMap, EdgeParams, EdgeResponse};
use crate::error::{Error, Result};
use crate::image::{GrayImage, RealImage};

/// Laplacian-of-Gaussian kernel of side `2 * ceil(3 sigma) + 1`, shifted to zero sum.
pub fn log_kernel(sigma: f64) -> Result<Kernel2D> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    let half = (3.0 * sigma).ceil() as isize;
    let side = (2 * half + 1) as usize;
    let s2 = sigma * sigma;
    let mut w = Vec::with_capacity(side * side);
    for y in -half..=half {
        for x in -half..=half {
            let q = (x * x + y * y) as f64 / (2.0 * s2);
            w.push(-1.0 / (PI * s2 * s2) * (1.0 - q) * (-q).exp());
        }
    }
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|v| *v -= mean);
    Kernel2D::new(side, side, w)
}

pub(super) fn detect(img: &GrayImage, params: &EdgeParams) -> Result<EdgeResponse> {
    let k = log_kernel(params.log_sigma)?;
    let (w, h) = (img.width(), img.height());
    let real = img.to_real();
    let resp = if k.rows() <= w && k.rows() <= h {
        convolve2d(&real, &k, Border::Replicate)?
    } else {
        convolve_clamped(&real, &k)
    };
    let t = params.log_threshold.unwrap_or_else(|| {
        0.75 * resp.data().iter().map(|v| v.abs()).sum::<f64>() / resp.data().len() as f64
    });
    let bits = zero_crossings(&resp, t);
    Ok(EdgeResponse {
        map: EdgeMap::from_bools(w, h, &bits),
        strength: resp,
    })
}

fn convolve_clamped(img: &RealImage, k: &Kernel2D) -> RealImage {
    let (w, h) = (img.width(), img.height());
    let half = (k.rows() / 2) as isize;
    let mut out = RealImage::zeros(w, h).expect("non-empty image");
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for i in 0..k.rows() {
                for j in 0..k.cols() {
                    acc += k.get(i, j)
                        * img.get_clamped(r as isize + half - i as isize, c as isize + half - j as isize);
                }
            }
            out.set(r, c, acc);
        }
    }
    out
}

/// Marks sign changes between 4-neighbours whose jump exceeds `t`. Of each
/// crossing pair the sample closer to zero is marked; exact zeros are marked
/// when their two opposite neighbours straddle zero.
fn zero_crossings(resp: &RealImage, t: f64) -> Vec<bool> {
    let (w, h) = (resp.width(), resp.height());
    let v = resp.data();
    let mut bits = vec![false; w * h];
    let mark_pair = |a: usize, b: usize, bits: &mut Vec<bool>| {
        let (x, y) = (v[a], v[b]);
        if ((x < 0.0 && y > 0.0) || (x > 0.0 && y < 0.0)) && (x - y).abs() > t {
            if x.abs() <= y.abs() {
                bits[a] = true;
            } else {
                bits[b] = true;
            }
        }
    };
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                mark_pair(i, i + 1, &mut bits);
            }
            if r + 1 < h {
                mark_pair(i, i + w, &mut bits);
            }
        }
    }
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if v[i] != 0.0 {
                continue;
            }
            let straddles = |a: f64, b: f64| (a < 0.0 && b > 0.0 || a > 0.0 && b < 0.0) && (a - b).abs() > t;
            if (c > 0 && c + 1 < w && straddles(v[i - 1], v[i + 1]))
                || (r > 0 && r + 1 < h && straddles(v[i - w], v[i + w]))
            {
                bits[i] = true;
            }
        }
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_sums_to_zero() {
        for sigma in [0.5, 1.0, 2.0, 3.3] {
            let k = log_kernel(sigma).unwrap();
            assert!(k.sum().abs() < 1e-6, "sigma {sigma}: {}", k.sum());
        }
        assert_eq!(log_kernel(2.0).unwrap().rows(), 13);
    }

    #[test]
    fn kernel_centre_is_negative_and_symmetric() {
        let k = log_kernel(2.0).unwrap();
        let c = 6;
        assert!(k.get(c, c) < 0.0);
        assert_eq!(k.get(c, 0), k.get(0, c));
        assert_eq!(k.get(2, 9), k.get(9, 2));
    }

    #[test]
    fn step_produces_crossings_along_the_step() {
        let img = GrayImage::from_fn(30, 30, |_, c| if c < 15 { 50 } else { 180 }).unwrap();
        let resp = detect(&img, &EdgeParams::default()).unwrap();
        for r in 0..30 {
            assert!(resp.map.get(r, 14) || resp.map.get(r, 15), "row {r}");
        }
    }

    #[test]
    fn zero_sample_between_opposite_signs_is_marked() {
        let img = RealImage::new(3, 1, vec![-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(zero_crossings(&img, 1.0), vec![false, true, false]);
    }
}
