//! First-order derivative operators.
//!
//! Kernels are applied as printed (correlation), so for Prewitt a vertical
//! edge that is darker on the right side has direction 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::convolve::{correlate2d, Border, Kernel2D};
use crate::error::{Error, Result};
use crate::image::{GrayImage, RealImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientOperator {
    Prewitt,
    /// Axis-aligned 3x3 masks.
    Roberts,
    /// Classical 2x2 diagonal masks, embedded in 3x3.
    RobertsClassic,
    Sobel,
}

impl GradientOperator {
    /// Horizontal and vertical derivative masks.
    pub fn kernels(self) -> (Kernel2D, Kernel2D) {
        match self {
            GradientOperator::Prewitt => (
                Kernel2D::from_3x3([[1.0, 0.0, -1.0], [1.0, 0.0, -1.0], [1.0, 0.0, -1.0]]),
                Kernel2D::from_3x3([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -1.0, -1.0]]),
            ),
            GradientOperator::Roberts => (
                Kernel2D::from_3x3([[0.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]),
                Kernel2D::from_3x3([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]),
            ),
            GradientOperator::RobertsClassic => (
                Kernel2D::from_3x3([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]),
                Kernel2D::from_3x3([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]]),
            ),
            GradientOperator::Sobel => (
                Kernel2D::from_3x3([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]),
                Kernel2D::from_3x3([[1.0, 2.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -2.0, -1.0]]),
            ),
        }
    }

    fn direction(self, gx: f64, gy: f64) -> f64 {
        let theta = gy.atan2(gx);
        match self {
            GradientOperator::Sobel => wrap_angle(theta - 3.0 * PI / 4.0),
            _ => theta,
        }
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(mut a: f64) -> f64 {
    while a <= -PI {
        a += 2.0 * PI;
    }
    while a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Per-pixel derivative responses with their magnitude and direction.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub gx: RealImage,
    pub gy: RealImage,
    pub magnitude: RealImage,
    /// Radians in (-π, π].
    pub direction: RealImage,
}

pub fn gradient(img: &GrayImage, op: GradientOperator) -> Result<GradientField> {
    gradient_real(&img.to_real(), op)
}

pub fn gradient_real(img: &RealImage, op: GradientOperator) -> Result<GradientField> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: 3,
        });
    }
    let (kx, ky) = op.kernels();
    let gx = correlate2d(img, &kx, Border::Replicate)?;
    let gy = correlate2d(img, &ky, Border::Replicate)?;
    let (w, h) = (img.width(), img.height());
    let mut mag = Vec::with_capacity(w * h);
    let mut dir = Vec::with_capacity(w * h);
    for (&x, &y) in gx.data().iter().zip(gy.data()) {
        mag.push((x * x + y * y).sqrt());
        dir.push(op.direction(x, y));
    }
    Ok(GradientField {
        gx,
        gy,
        magnitude: RealImage::new(w, h, mag)?,
        direction: RealImage::new(w, h, dir)?,
    })
}
