use std::collections::VecDeque;

use super::convolve::{convolve2d, Border, Kernel2D};
use super::gradient::{gradient_real, GradientOperator};
use super::{EdgeMap, EdgeParams, EdgeResponse};
use crate::error::Result;
use crate::image::{GrayImage, RealImage};

const HIGH_PERCENTILE: f64 = 0.7;
const LOW_RATIO: f64 = 0.4;

/// Intermediate Canny products, exposed for inspection and testing.
#[derive(Clone, Debug)]
pub struct CannyStages {
    pub magnitude: RealImage,
    /// Non-maximum-suppressed pixels above the high threshold.
    pub strong: Vec<bool>,
    /// Non-maximum-suppressed pixels above the low threshold (includes `strong`).
    pub weak: Vec<bool>,
    pub high: f64,
    pub low: f64,
    pub edges: EdgeMap,
}

/// Full Canny (`approximate = false`) or the cheaper ApproxCanny variant.
pub fn canny(img: &GrayImage, params: &EdgeParams, approximate: bool) -> Result<CannyStages> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let real = img.to_real();
    let smoothed = if approximate {
        let b = Kernel2D::box_filter(3)?;
        let once = convolve2d(&real, &b, Border::Replicate)?;
        convolve2d(&once, &b, Border::Replicate)?
    } else {
        let g = Kernel2D::gaussian(params.canny_sigma)?;
        if g.rows() <= w && g.rows() <= h {
            convolve2d(&real, &g, Border::Replicate)?
        } else {
            gaussian_clamped(&real, &g)
        }
    };
    let grad = gradient_real(&smoothed, GradientOperator::Sobel)?;
    let mag = grad.magnitude.data();

    let max = mag.iter().cloned().fold(0.0, f64::max);
    let (high, low) = match params.canny_high {
        Some(hi) => {
            let hi_abs = hi * max;
            (hi_abs, params.canny_low.map_or(LOW_RATIO * hi_abs, |lo| lo * max))
        }
        None => {
            let mut high = percentile_of_nonzero(mag, HIGH_PERCENTILE);
            if approximate {
                high = high.max(params.approx_min_strong);
            }
            (high, LOW_RATIO * high)
        }
    };

    let nms = non_max_suppression(&grad.gx, &grad.gy, &grad.magnitude);
    let strong: Vec<bool> = (0..w * h).map(|i| nms[i] && mag[i] > high).collect();
    let weak: Vec<bool> = (0..w * h).map(|i| nms[i] && mag[i] > low).collect();
    let bits = if approximate {
        single_pass_hysteresis(w, h, &strong, &weak)
    } else {
        hysteresis(w, h, &strong, &weak)
    };
    Ok(CannyStages {
        magnitude: grad.magnitude,
        strong,
        weak,
        high,
        low,
        edges: EdgeMap::from_bools(w, h, &bits),
    })
}

pub(super) fn detect(img: &GrayImage, params: &EdgeParams, approximate: bool) -> Result<EdgeResponse> {
    let stages = canny(img, params, approximate)?;
    Ok(EdgeResponse {
        map: stages.edges,
        strength: stages.magnitude,
    })
}

/// Gaussian smoothing for images smaller than the kernel (coordinates clamped).
fn gaussian_clamped(img: &RealImage, k: &Kernel2D) -> RealImage {
    let (w, h) = (img.width(), img.height());
    let half = (k.rows() / 2) as isize;
    let mut out = RealImage::zeros(w, h).expect("non-empty image");
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for i in 0..k.rows() {
                for j in 0..k.cols() {
                    let v = img.get_clamped(
                        r as isize + half - i as isize,
                        c as isize + half - j as isize,
                    );
                    acc += k.get(i, j) * v;
                }
            }
            out.set(r, c, acc);
        }
    }
    out
}

/// Nearest-rank percentile over the strictly positive entries; 0 when none.
fn percentile_of_nonzero(values: &[f64], q: f64) -> f64 {
    let mut nz: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    if nz.is_empty() {
        return 0.0;
    }
    nz.sort_by(f64::total_cmp);
    let rank = (q * nz.len() as f64).ceil().max(1.0) as usize;
    nz[rank - 1]
}

/// Four-direction non-maximum suppression. `gx` points right, Sobel `gy` points up.
fn non_max_suppression(gx: &RealImage, gy: &RealImage, mag: &RealImage) -> Vec<bool> {
    let (w, h) = (mag.width(), mag.height());
    let at = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            0.0
        } else {
            mag.get(r as usize, c as usize)
        }
    };
    let mut keep = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let m = mag.get(r, c);
            if m <= 0.0 {
                continue;
            }
            // Row axis grows downwards, so flip the Sobel y response.
            let dx = gx.get(r, c);
            let dy = -gy.get(r, c);
            let mut angle = dy.atan2(dx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dr, dc) = if !(22.5..157.5).contains(&angle) {
                (0, 1)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (1, 0)
            } else {
                (1, -1)
            };
            let (ri, ci) = (r as isize, c as isize);
            let behind = at(ri - dr, ci - dc);
            let ahead = at(ri + dr, ci + dc);
            keep[r * w + c] = m > behind && m >= ahead;
        }
    }
    keep
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Flood fill from strong pixels through 8-connected weak pixels.
fn hysteresis(w: usize, h: usize, strong: &[bool], weak: &[bool]) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, &s) in strong.iter().enumerate() {
        if s {
            out[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (r, c) = ((i / w) as isize, (i % w) as isize);
        for (dr, dc) in NEIGHBORS {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                continue;
            }
            let j = nr as usize * w + nc as usize;
            if weak[j] && !out[j] {
                out[j] = true;
                queue.push_back(j);
            }
        }
    }
    out
}

/// One raster pass: a weak pixel survives if a strong neighbour or an already
/// accepted neighbour touches it. Chains running up or left are missed.
fn single_pass_hysteresis(w: usize, h: usize, strong: &[bool], weak: &[bool]) -> Vec<bool> {
    let mut out = strong.to_vec();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if out[i] || !weak[i] {
                continue;
            }
            out[i] = NEIGHBORS.iter().any(|&(dr, dc)| {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                nr >= 0
                    && nc >= 0
                    && nr < h as isize
                    && nc < w as isize
                    && out[nr as usize * w + nc as usize]
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_uses_nearest_rank() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        // ten positive values, ceil(0.7 * 10) = 7th smallest
        assert_eq!(percentile_of_nonzero(&v, 0.7), 7.0);
        assert_eq!(percentile_of_nonzero(&[0.0, 0.0], 0.7), 0.0);
    }

    #[test]
    fn hysteresis_follows_weak_chains() {
        // strong at 0, weak chain 1..=3, isolated weak at 5
        let strong = [true, false, false, false, false, false];
        let weak = [true, true, true, true, false, true];
        assert_eq!(
            hysteresis(6, 1, &strong, &weak),
            vec![true, true, true, true, false, false]
        );
    }

    #[test]
    fn single_pass_misses_chains_leading_backwards() {
        // strong at the right end: a forward raster pass cannot reach the chain.
        let strong = [false, false, true];
        let weak = [true, true, true];
        assert_eq!(
            single_pass_hysteresis(3, 1, &strong, &weak),
            vec![false, true, true]
        );
        assert_eq!(hysteresis(3, 1, &strong, &weak), vec![true, true, true]);
    }

    #[test]
    fn canny_finds_a_thin_step_edge() {
        let img = GrayImage::from_fn(24, 24, |_, c| if c < 12 { 40 } else { 200 }).unwrap();
        let st = canny(&img, &EdgeParams::default(), false).unwrap();
        for r in 3..21 {
            let cols: Vec<usize> = (0..24).filter(|&c| st.edges.get(r, c)).collect();
            assert_eq!(cols.len(), 1, "row {r}: {cols:?}");
            assert!(cols[0] == 11 || cols[0] == 12);
        }
    }

    #[test]
    fn approx_floor_silences_faint_texture() {
        let img = GrayImage::from_fn(40, 40, |r, c| 140 + ((r * 7 + c * 13) % 5) as u8).unwrap();
        let st = canny(&img, &EdgeParams::default(), true).unwrap();
        assert_eq!(st.edges.count(), 0);
        let p = EdgeParams {
            approx_min_strong: 0.0,
            ..EdgeParams::default()
        };
        assert!(canny(&img, &p, true).unwrap().edges.count() > 0);
    }
}
