//! Soft-margin binary SVM trained by sequential minimal optimization.
//!
//! The solver follows the LIBSVM update: first-order working-set selection
//! (maximal violating pair), analytic two-variable step with box clipping,
//! gradient maintained over a precomputed kernel matrix. Features are
//! z-scored with statistics from the training data.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const MAX_ITERATIONS: usize = 1_000_000;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    /// `(1 + x·z / scale²)^degree`
    Polynomial { degree: i32, scale: f64 },
    /// `exp(-‖x - z‖² / scale²)`
    Gaussian { scale: f64 },
}

impl Kernel {
    /// Kernel value from the inner product and the two squared norms.
    pub fn from_dot(&self, dot: f64, norm_x: f64, norm_z: f64) -> f64 {
        match *self {
            Kernel::Linear => dot,
            Kernel::Polynomial { degree, scale } => (1.0 + dot / (scale * scale)).powi(degree),
            Kernel::Gaussian { scale } => {
                let d2 = (norm_x + norm_z - 2.0 * dot).max(0.0);
                (-d2 / (scale * scale)).exp()
            }
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        let dot = x.iter().zip(z).map(|(a, b)| a * b).sum();
        let nx = x.iter().map(|a| a * a).sum();
        let nz = z.iter().map(|a| a * a).sum();
        self.from_dot(dot, nx, nz)
    }

    /// Kernel matrix between the rows of `a` and the rows of `b`.
    pub fn matrix(&self, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut k = a.dot(&b.t());
        if matches!(self, Kernel::Linear) {
            return k;
        }
        let na = squared_norms(a);
        let nb = squared_norms(b);
        for (i, mut row) in k.axis_iter_mut(Axis(0)).enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.from_dot(*v, na[i], nb[j]);
            }
        }
        k
    }
}

pub(crate) fn squared_norms(a: ArrayView2<'_, f64>) -> Vec<f64> {
    a.rows().into_iter().map(|r| r.dot(&r)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoOptions {
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision offset: `f(x) = Σ αᵢ yᵢ K(xᵢ, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
}

/// Solves the dual for labels `y ∈ {-1, +1}` over the kernel matrix `k`.
pub fn smo(k: &Array2<f64>, y: &[f64], opts: SmoOptions) -> Result<SmoSolution> {
    let n = y.len();
    let c = opts.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * k[[i, j]];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < opts.tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence(iterations));
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = old_i - old_j;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = old_i + old_j;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        let (di, dj) = (ai - old_i, aj - old_j);
        alpha[i] = ai;
        alpha[j] = aj;
        let (ci, cj) = (y[i] * di, y[j] * dj);
        let (ki, kj) = (k.row(i), k.row(j));
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * ci + kj[t] * cj);
        }
    }

    // Offset: average over free vectors, else the midpoint of the feasible interval.
    let (mut sum, mut free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    Ok(SmoSolution {
        alpha,
        bias: -rho,
        iterations,
    })
}

/// Largest KKT violation of a dual solution given decision values `f`.
pub fn kkt_violation(alpha: &[f64], y: &[f64], f: &[f64], c: f64) -> f64 {
    alpha
        .iter()
        .zip(y)
        .zip(f)
        .map(|((&a, &yi), &fi)| {
            let m = yi * fi;
            if a <= 0.0 {
                (1.0 - m).max(0.0)
            } else if a >= c {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    kernel: Kernel,
    standardizer: Standardizer,
    support: Array2<f64>,
    /// `αᵢ yᵢ` per support vector.
    coef: Vec<f64>,
    bias: f64,
    iterations: usize,
}

impl SvmModel {
    pub fn fit(data: &Dataset, kernel: Kernel, opts: SmoOptions) -> Result<Self> {
        data.require_both_classes()?;
        let standardizer = Standardizer::fit(data.features());
        let z = standardizer.transform(data.features());
        let y: Vec<f64> = data
            .labels()
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { -1.0 })
            .collect();
        let k = kernel.matrix(z.view(), z.view());
        let sol = smo(&k, &y, opts)?;
        let sv: Vec<usize> = (0..y.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
        Ok(Self {
            kernel,
            standardizer,
            support: z.select(Axis(0), &sv),
            coef: sv.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
            bias: sol.bias,
            iterations: sol.iterations,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.n_features()
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Decision values for every row of `x`.
    pub fn decision(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let z = self.standardizer.transform(x);
        if self.coef.is_empty() {
            return vec![self.bias; x.nrows()];
        }
        let k = self.kernel.matrix(z.view(), self.support.view());
        let coef = Array1::from(self.coef.clone());
        (k.dot(&coef) + self.bias).to_vec()
    }
}
