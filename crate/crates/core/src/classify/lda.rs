//! Two-class linear discriminant with a pooled, ridge-regularized covariance.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};

/// Ridge added to the pooled covariance, relative to its mean diagonal.
pub const RIDGE: f64 = 1e-6;

/// Class means and pooled covariance of z-scored training data. Fitted once,
/// it can produce discriminants over any subset of columns.
pub struct DiscriminantStats {
    pub standardizer: Standardizer,
    means: [Array1<f64>; 2],
    cov: Array2<f64>,
    log_prior_ratio: f64,
}

impl DiscriminantStats {
    pub fn fit(data: &Dataset) -> Result<Self> {
        data.require_both_classes()?;
        let standardizer = Standardizer::fit(data.features());
        let mut z = standardizer.transform(data.features());
        let [n0, n1] = data.class_counts();
        let p = z.ncols();
        let mut means = [Array1::zeros(p), Array1::zeros(p)];
        for (row, &l) in z.rows().into_iter().zip(data.labels()) {
            means[l as usize] += &row;
        }
        means[0] /= n0 as f64;
        means[1] /= n1 as f64;
        for (mut row, &l) in z.rows_mut().into_iter().zip(data.labels()) {
            row -= &means[l as usize];
        }
        let dof = (data.n_samples().saturating_sub(2)).max(1) as f64;
        let cov = z.t().dot(&z) / dof;
        Ok(Self {
            standardizer,
            means,
            cov,
            log_prior_ratio: (n1 as f64 / n0 as f64).ln(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.cov.nrows()
    }

    /// Discriminant over `columns` (all columns when `None`), in z-scored units.
    pub fn discriminant(&self, columns: Option<&[usize]>) -> Result<LinearDiscriminant> {
        let all: Vec<usize>;
        let cols = match columns {
            Some(c) => c,
            None => {
                all = (0..self.n_features()).collect();
                &all
            }
        };
        let p = cols.len();
        let sub = self.cov.select(Axis(0), cols).select(Axis(1), cols);
        let trace: f64 = sub.diag().sum();
        let mut gamma = if trace > 0.0 { RIDGE * trace / p as f64 } else { RIDGE };
        let mu: Vec<DVector<f64>> = self
            .means
            .iter()
            .map(|m| DVector::from_iterator(p, cols.iter().map(|&c| m[c])))
            .collect();
        for _ in 0..12 {
            let mut m = DMatrix::from_fn(p, p, |i, j| sub[[i, j]]);
            for i in 0..p {
                m[(i, i)] += gamma;
            }
            if let Some(ch) = m.cholesky() {
                let a = ch.solve(&mu[1]);
                let b = ch.solve(&mu[0]);
                let w = &a - &b;
                let bias = -0.5 * (mu[1].dot(&a) - mu[0].dot(&b)) + self.log_prior_ratio;
                return Ok(LinearDiscriminant {
                    columns: cols.to_vec(),
                    weights: w.iter().copied().collect(),
                    bias,
                });
            }
            gamma *= 10.0;
        }
        Err(Error::InvalidParams("pooled covariance is not positive definite".into()))
    }
}

/// `score(z) = w·z[columns] + bias`; class 1 when positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDiscriminant {
    columns: Vec<usize>,
    weights: Vec<f64>,
    bias: f64,
}

impl LinearDiscriminant {
    pub fn score_z(&self, z: ArrayView1<'_, f64>) -> f64 {
        self.columns
            .iter()
            .zip(&self.weights)
            .map(|(&c, w)| z[c] * w)
            .sum::<f64>()
            + self.bias
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    standardizer: Standardizer,
    discriminant: LinearDiscriminant,
}

impl LdaModel {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let stats = DiscriminantStats::fit(data)?;
        let discriminant = stats.discriminant(None)?;
        Ok(Self {
            standardizer: stats.standardizer,
            discriminant,
        })
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.n_features()
    }

    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let z = self.standardizer.transform(x);
        z.rows().into_iter().map(|r| self.discriminant.score_z(r)).collect()
    }

    /// Discriminant score in raw feature units: `w·x + b`.
    pub fn raw_weights(&self) -> (Vec<f64>, f64) {
        let z0 = self.standardizer.transform_row(Array1::zeros(self.n_features()).view());
        let unit = self.standardizer.transform_row(Array1::ones(self.n_features()).view());
        let mut w = vec![0.0; self.n_features()];
        for (&c, &wc) in self.discriminant.columns.iter().zip(&self.discriminant.weights) {
            w[c] = wc * (unit[c] - z0[c]);
        }
        (w, self.discriminant.score_z(z0.view()))
    }
}
