use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::RealImage;

/// Small odd-sized filter kernel, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel2D {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows % 2 == 0 || cols % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "kernel dimensions must be odd, got {rows}x{cols}"
            )));
        }
        if weights.len() != rows * cols {
            return Err(Error::InvalidParams(format!(
                "{} weights for a {rows}x{cols} kernel",
                weights.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            weights,
        })
    }

    /// 3x3 kernel from a literal matrix.
    pub fn from_3x3(m: [[f64; 3]; 3]) -> Self {
        Self {
            rows: 3,
            cols: 3,
            weights: m.iter().flatten().copied().collect(),
        }
    }

    pub fn identity() -> Self {
        Self {
            rows: 1,
            cols: 1,
            weights: vec![1.0],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols + j]
    }

    /// Kernel rotated by 180°. Convolving with the flipped kernel is
    /// correlation with the original.
    pub fn flipped(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            weights: self.weights.iter().rev().copied().collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Normalized isotropic Gaussian with side `2 * ceil(3 sigma) + 1`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        let half = (3.0 * sigma).ceil() as isize;
        let side = (2 * half + 1) as usize;
        let mut weights = Vec::with_capacity(side * side);
        for y in -half..=half {
            for x in -half..=half {
                let r2 = (x * x + y * y) as f64;
                weights.push((-r2 / (2.0 * sigma * sigma)).exp());
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(side, side, weights)
    }

    /// Uniform `side x side` averaging kernel.
    pub fn box_filter(side: usize) -> Result<Self> {
        let n = (side * side) as f64;
        Self::new(side, side, vec![1.0 / n; side * side])
    }
}

/// How samples outside the image are synthesized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Border {
    #[default]
    Replicate,
    Zero,
}

/// Same-size 2D convolution (kernel flipped on both axes).
pub fn convolve2d(img: &RealImage, kernel: &Kernel2D, border: Border) -> Result<RealImage> {
    let (w, h) = (img.width(), img.height());
    if kernel.rows() > h || kernel.cols() > w {
        return Err(Error::KernelTooLarge {
            kernel_rows: kernel.rows(),
            kernel_cols: kernel.cols(),
            rows: h,
            cols: w,
        });
    }
    let ch = (kernel.rows() / 2) as isize;
    let cw = (kernel.cols() / 2) as isize;
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for i in 0..kernel.rows() {
                let sr = r as isize + ch - i as isize;
                for j in 0..kernel.cols() {
                    let k = kernel.get(i, j);
                    if k == 0.0 {
                        continue;
                    }
                    let sc = c as isize + cw - j as isize;
                    let v = match border {
                        Border::Replicate => img.get_clamped(sr, sc),
                        Border::Zero => {
                            if sr < 0 || sc < 0 || sr >= h as isize || sc >= w as isize {
                                0.0
                            } else {
                                img.get(sr as usize, sc as usize)
                            }
                        }
                    };
                    acc += k * v;
                }
            }
            out[r * w + c] = acc;
        }
    }
    RealImage::new(w, h, out)
}

/// Same-size correlation: the kernel is applied as printed, without flipping.
pub fn correlate2d(img: &RealImage, kernel: &Kernel2D, border: Border) -> Result<RealImage> {
    convolve2d(img, &kernel.flipped(), border)
}
