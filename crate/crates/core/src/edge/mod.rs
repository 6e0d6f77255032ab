//! Edge-detector feature extractors.
//!
//! Six detectors turn a grayscale patch into a binary [`EdgeMap`]; flattening
//! the map row-major gives one feature per pixel (1600 for a 40x40 patch).
//!
//! | method        | response                         | decision                                   |
//! |---------------|----------------------------------|--------------------------------------------|
//! | prewitt/roberts/sobel | gradient magnitude       | `ρ > t` (auto `t = 4·mean ρ`) plus thinning |
//! | log           | Laplacian of Gaussian (σ = 2)    | zero crossings steeper than `0.75·mean|r|` |
//! | canny         | Gaussian (σ = √2) + Sobel        | NMS, double threshold, hysteresis          |
//! | approxcanny   | 2x box blur + Sobel              | NMS, floored double threshold, one-pass hysteresis |

mod canny;
mod convolve;
mod gradient;
mod log;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::canny::{canny, CannyStages};
pub use self::convolve::{convolve2d, correlate2d, Border, Kernel2D};
pub use self::gradient::{gradient, gradient_real, wrap_angle, GradientField, GradientOperator};
pub use self::log::log_kernel;

use crate::descriptor::{Descriptor, FeatureVector};
use crate::error::{Error, Result};
use crate::image::{GrayImage, RealImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeMethod {
    Canny,
    Prewitt,
    Sobel,
    Roberts,
    Log,
    ApproxCanny,
}

impl EdgeMethod {
    /// Column order of the edge results table.
    pub const ALL: [EdgeMethod; 6] = [
        EdgeMethod::Canny,
        EdgeMethod::Prewitt,
        EdgeMethod::Sobel,
        EdgeMethod::Roberts,
        EdgeMethod::Log,
        EdgeMethod::ApproxCanny,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EdgeMethod::Canny => "canny",
            EdgeMethod::Prewitt => "prewitt",
            EdgeMethod::Sobel => "sobel",
            EdgeMethod::Roberts => "roberts",
            EdgeMethod::Log => "log",
            EdgeMethod::ApproxCanny => "approxcanny",
        }
    }
}

impl fmt::Display for EdgeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown edge method {s:?}")))
    }
}

/// Tunables for all six detectors. `None` thresholds are derived per image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    /// Absolute magnitude threshold for prewitt/roberts/sobel.
    pub threshold: Option<f64>,
    /// Keep only directional local maxima of the magnitude (prewitt/roberts/sobel).
    pub thinning: bool,
    /// Use the 2x2 diagonal Roberts masks instead of the 3x3 axis-aligned ones.
    pub roberts_classic: bool,
    pub log_sigma: f64,
    /// Absolute zero-crossing contrast threshold for LoG.
    pub log_threshold: Option<f64>,
    pub canny_sigma: f64,
    /// High hysteresis threshold as a fraction of the maximum magnitude.
    pub canny_high: Option<f64>,
    /// Low hysteresis threshold as a fraction of the maximum magnitude.
    pub canny_low: Option<f64>,
    /// Lower bound on the automatic ApproxCanny high threshold, in magnitude units.
    pub approx_min_strong: f64,
    /// Emit the thresholded response strength instead of {0, 1}.
    pub raw_magnitude: bool,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            threshold: None,
            thinning: true,
            roberts_classic: false,
            log_sigma: 2.0,
            log_threshold: None,
            canny_sigma: std::f64::consts::SQRT_2,
            canny_high: None,
            canny_low: None,
            approx_min_strong: 32.0,
            raw_magnitude: false,
        }
    }
}

impl EdgeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.log_sigma > 0.0 && self.log_sigma.is_finite()) {
            return bad(format!("log_sigma must be positive, got {}", self.log_sigma));
        }
        if !(self.canny_sigma > 0.0 && self.canny_sigma.is_finite()) {
            return bad(format!("canny_sigma must be positive, got {}", self.canny_sigma));
        }
        for (name, t) in [("threshold", self.threshold), ("log_threshold", self.log_threshold)] {
            if let Some(t) = t {
                if !(t >= 0.0 && t.is_finite()) {
                    return bad(format!("{name} must be non-negative, got {t}"));
                }
            }
        }
        for (name, t) in [("canny_high", self.canny_high), ("canny_low", self.canny_low)] {
            if let Some(t) = t {
                if !(0.0..=1.0).contains(&t) {
                    return bad(format!("{name} must lie in [0, 1], got {t}"));
                }
            }
        }
        match (self.canny_low, self.canny_high) {
            (Some(lo), Some(hi)) if lo >= hi => {
                return bad(format!("canny_low {lo} must be below canny_high {hi}"))
            }
            (Some(_), None) => return bad("canny_low given without canny_high".into()),
            _ => {}
        }
        if !(self.approx_min_strong >= 0.0 && self.approx_min_strong.is_finite()) {
            return bad(format!(
                "approx_min_strong must be non-negative, got {}",
                self.approx_min_strong
            ));
        }
        Ok(())
    }
}

/// Row-major binary edge image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height || bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParams(
                "edge map needs width*height bits in {0, 1}".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    fn from_bools(width: usize, height: usize, bits: &[bool]) -> Self {
        Self {
            width,
            height,
            bits: bits.iter().map(|&b| u8::from(b)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col] == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Black background, white edges; for debug dumps.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(
            self.width,
            self.height,
            self.bits.iter().map(|&b| b * 255).collect(),
        )
        .expect("edge map dimensions are valid")
    }
}

/// Edge map plus the response image it was thresholded from.
#[derive(Clone, Debug)]
pub struct EdgeResponse {
    pub map: EdgeMap,
    pub strength: RealImage,
}

pub fn detect_edges(img: &GrayImage, method: EdgeMethod, params: &EdgeParams) -> Result<EdgeMap> {
    detect_edges_with_response(img, method, params).map(|r| r.map)
}

pub fn detect_edges_with_response(
    img: &GrayImage,
    method: EdgeMethod,
    params: &EdgeParams,
) -> Result<EdgeResponse> {
    params.validate()?;
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: 3,
        });
    }
    match method {
        EdgeMethod::Prewitt => threshold_gradient(img, GradientOperator::Prewitt, params),
        EdgeMethod::Sobel => threshold_gradient(img, GradientOperator::Sobel, params),
        EdgeMethod::Roberts => {
            let op = if params.roberts_classic {
                GradientOperator::RobertsClassic
            } else {
                GradientOperator::Roberts
            };
            threshold_gradient(img, op, params)
        }
        EdgeMethod::Log => log::detect(img, params),
        EdgeMethod::Canny => canny::detect(img, params, false),
        EdgeMethod::ApproxCanny => canny::detect(img, params, true),
    }
}

/// Flattens the detector output row-major into a feature vector.
pub fn edge_features(img: &GrayImage, method: EdgeMethod, params: &EdgeParams) -> Result<FeatureVector> {
    let resp = detect_edges_with_response(img, method, params)?;
    let values = if params.raw_magnitude {
        resp.map
            .bits()
            .iter()
            .zip(resp.strength.data())
            .map(|(&b, &s)| if b == 1 { s.abs() } else { 0.0 })
            .collect()
    } else {
        resp.map.bits().iter().map(|&b| f64::from(b)).collect()
    };
    Ok(FeatureVector::new(Descriptor::Edge(method), values))
}

fn threshold_gradient(
    img: &GrayImage,
    op: GradientOperator,
    params: &EdgeParams,
) -> Result<EdgeResponse> {
    let g = gradient(img, op)?;
    let (w, h) = (img.width(), img.height());
    let mag = g.magnitude.data();
    let t = params
        .threshold
        .unwrap_or_else(|| 4.0 * mag.iter().sum::<f64>() / mag.len() as f64);
    let at = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            0.0
        } else {
            mag[r as usize * w + c as usize]
        }
    };
    let mut bits = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let m = mag[r * w + c];
            if m <= t {
                continue;
            }
            let keep = if params.thinning {
                let (ri, ci) = (r as isize, c as isize);
                // Plateaus of equal magnitude keep their first pixel only.
                if g.gx.get(r, c).abs() >= g.gy.get(r, c).abs() {
                    m > at(ri, ci - 1) && m >= at(ri, ci + 1)
                } else {
                    m > at(ri - 1, ci) && m >= at(ri + 1, ci)
                }
            } else {
                true
            };
            bits[r * w + c] = keep;
        }
    }
    Ok(EdgeResponse {
        map: EdgeMap::from_bools(w, h, &bits),
        strength: g.magnitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, w: usize, h: usize) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random()).unwrap()
    }

    #[test]
    fn constant_image_has_no_edges_for_any_method() {
        let img = GrayImage::filled(40, 40, 131).unwrap();
        for m in EdgeMethod::ALL {
            let map = detect_edges(&img, m, &EdgeParams::default()).unwrap();
            assert_eq!(map.count(), 0, "{m}");
            assert_eq!(map.bits().len(), 1600);
        }
    }

    #[test]
    fn sobel_marks_a_single_column_on_a_vertical_step() {
        let img = GrayImage::from_fn(20, 12, |_, c| if c < 10 { 0 } else { 255 }).unwrap();
        let map = detect_edges(&img, EdgeMethod::Sobel, &EdgeParams::default()).unwrap();
        for r in 0..12 {
            let cols: Vec<usize> = (0..20).filter(|&c| map.get(r, c)).collect();
            assert_eq!(cols, vec![9], "row {r}");
        }
    }

    #[test]
    fn feature_length_and_row_major_order() {
        let img = random_image(3, 40, 40);
        for m in EdgeMethod::ALL {
            let f = edge_features(&img, m, &EdgeParams::default()).unwrap();
            assert_eq!(f.len(), 1600);
            assert!(f.values().iter().all(|&v| v == 0.0 || v == 1.0));
        }
        let mut bits = vec![0u8; 12];
        bits[1] = 1;
        let map = EdgeMap::new(4, 3, bits).unwrap();
        assert!(map.get(0, 1));
        assert_eq!(map.bits().iter().position(|&b| b == 1), Some(1));
    }

    #[test]
    fn detection_is_deterministic() {
        let img = random_image(11, 40, 40);
        for m in EdgeMethod::ALL {
            let a = detect_edges(&img, m, &EdgeParams::default()).unwrap();
            let b = detect_edges(&img, m, &EdgeParams::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let img = random_image(1, 10, 10);
        let cases = [
            EdgeParams {
                log_sigma: 0.0,
                ..EdgeParams::default()
            },
            EdgeParams {
                canny_sigma: -1.0,
                ..EdgeParams::default()
            },
            EdgeParams {
                canny_high: Some(1.5),
                ..EdgeParams::default()
            },
            EdgeParams {
                canny_high: Some(0.3),
                canny_low: Some(0.3),
                ..EdgeParams::default()
            },
        ];
        for p in cases {
            assert!(matches!(
                detect_edges(&img, EdgeMethod::Canny, &p),
                Err(Error::InvalidParams(_))
            ));
        }
        assert!(matches!(
            detect_edges(&random_image(1, 2, 2), EdgeMethod::Sobel, &EdgeParams::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn raw_magnitude_mode_keeps_strength_on_edges() {
        let img = GrayImage::from_fn(12, 12, |_, c| if c < 6 { 0 } else { 200 }).unwrap();
        let params = EdgeParams {
            raw_magnitude: true,
            ..EdgeParams::default()
        };
        let f = edge_features(&img, EdgeMethod::Prewitt, &params).unwrap();
        assert!(f.values().iter().any(|&v| v == 600.0));
        assert!(f.values().iter().all(|&v| v == 0.0 || v == 600.0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in EdgeMethod::ALL {
            assert_eq!(m.name().parse::<EdgeMethod>().unwrap(), m);
        }
        assert!("sobol".parse::<EdgeMethod>().is_err());
    }
}
