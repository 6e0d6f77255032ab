use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature matrix (one row per sample) with binary labels: 0 clean, 1 defect.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    ids: Vec<String>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, ids: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.nrows() != labels.len() || ids.len() != labels.len() {
            return Err(Error::InvalidParams(format!(
                "{} feature rows, {} labels, {} ids",
                features.nrows(),
                labels.len(),
                ids.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidParams("dataset has no predictors".into()));
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::BadLabel {
                line: i,
                label: labels[i].to_string(),
            });
        }
        Ok(Self {
            features,
            labels,
            ids,
        })
    }

    /// Dataset with ids `0..n`.
    pub fn from_parts(features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        let ids = (0..labels.len()).map(|i| i.to_string()).collect();
        Self::new(features, labels, ids)
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// `[clean, defect]` counts.
    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(&self.labels)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let [a, b] = self.class_counts();
        if a == 0 || b == 0 {
            Err(Error::SingleClassDataset)
        } else {
            Ok(())
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(1), columns),
            labels: self.labels.clone(),
            ids: self.ids.clone(),
        }
    }

    /// Copy with every label inverted.
    pub fn flipped_labels(&self) -> Dataset {
        Dataset {
            features: self.features.clone(),
            labels: self.labels.iter().map(|&l| 1 - l).collect(),
            ids: self.ids.clone(),
        }
    }
}

pub fn class_counts(labels: &[u8]) -> [usize; 2] {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    [labels.len() - ones, ones]
}

/// Per-column z-scoring fitted on a training split. Constant columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let mut scale = Array1::zeros(x.ncols());
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let m = mean[j];
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            row -= &self.mean;
            row /= &self.scale;
        }
        out
    }

    pub fn transform_row(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        (&x - &self.mean) / &self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn construction_checks_shapes_and_labels() {
        assert!(matches!(
            Dataset::from_parts(Array2::zeros((0, 3)), vec![]),
            Err(Error::EmptyDataset)
        ));
        assert!(Dataset::from_parts(Array2::zeros((2, 3)), vec![0]).is_err());
        assert!(matches!(
            Dataset::from_parts(Array2::zeros((2, 1)), vec![0, 2]),
            Err(Error::BadLabel { .. })
        ));
    }

    #[test]
    fn standardizer_zero_mean_unit_variance() {
        let x = array![[1.0, 5.0, 2.0], [3.0, 5.0, 4.0], [5.0, 5.0, 9.0]];
        let s = Standardizer::fit(x.view());
        let z = s.transform(x.view());
        for j in 0..3 {
            let col = z.column(j);
            assert!(col.sum().abs() < 1e-12);
            let var = col.iter().map(|v| v * v).sum::<f64>() / 3.0;
            if j == 1 {
                assert_eq!(var, 0.0);
            } else {
                assert!((var - 1.0).abs() < 1e-12);
            }
        }
        let row = s.transform_row(x.row(2));
        assert_eq!(row, z.row(2));
    }

    #[test]
    fn subset_and_columns() {
        let d = Dataset::from_parts(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], vec![0, 1, 1]).unwrap();
        let s = d.subset(&[2, 0]);
        assert_eq!(s.labels(), &[1, 0]);
        assert_eq!(s.features(), array![[5.0, 6.0], [1.0, 2.0]]);
        assert_eq!(d.select_columns(&[1]).features(), array![[2.0], [4.0], [6.0]]);
        assert_eq!(d.class_counts(), [1, 2]);
        assert_eq!(d.flipped_labels().labels(), &[1, 0, 0]);
    }
}
