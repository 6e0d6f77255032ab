//! k-nearest-neighbour classifiers over z-scored features.
//!
//! Neighbours are ranked by distance, ties going to the lower training index.
//! Majority-vote ties go to class 0. The weighted variant weighs votes by
//! `1 / d²`; neighbours at distance zero, if any, decide alone.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    /// `1 - cos∠(x, z)`; a zero vector is at distance 1 from everything.
    Cosine,
    /// Minkowski distance with p = 3.
    Cubic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnnVariant {
    Fine,
    Medium,
    Coarse,
    Cosine,
    Cubic,
    Weighted,
}

impl KnnVariant {
    pub const ALL: [KnnVariant; 6] = [
        KnnVariant::Fine,
        KnnVariant::Medium,
        KnnVariant::Coarse,
        KnnVariant::Cosine,
        KnnVariant::Cubic,
        KnnVariant::Weighted,
    ];

    pub fn k(self) -> usize {
        match self {
            KnnVariant::Fine => 1,
            KnnVariant::Coarse => 100,
            _ => 10,
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            KnnVariant::Cosine => Metric::Cosine,
            KnnVariant::Cubic => Metric::Cubic,
            _ => Metric::Euclidean,
        }
    }

    pub fn weighted(self) -> bool {
        self == KnnVariant::Weighted
    }
}

/// Ranking keys between every query row and every training row. Euclidean
/// keys are squared distances and cubic keys are sums of cubed differences;
/// both order identically to the true distances.
pub(crate) fn distance_keys(
    metric: Metric,
    query: ArrayView2<'_, f64>,
    train: ArrayView2<'_, f64>,
    train_norms: &[f64],
) -> Array2<f64> {
    match metric {
        Metric::Euclidean => {
            let mut d = query.dot(&train.t());
            for (q, mut row) in query.rows().into_iter().zip(d.rows_mut()) {
                let nq = q.dot(&q);
                for (v, &nt) in row.iter_mut().zip(train_norms) {
                    *v = (nq + nt - 2.0 * *v).max(0.0);
                }
            }
            d
        }
        Metric::Cosine => {
            let mut d = query.dot(&train.t());
            for (q, mut row) in query.rows().into_iter().zip(d.rows_mut()) {
                let nq = q.dot(&q).sqrt();
                for (v, &nt) in row.iter_mut().zip(train_norms) {
                    let denom = nq * nt.sqrt();
                    *v = if denom > 0.0 { 1.0 - *v / denom } else { 1.0 };
                }
            }
            d
        }
        Metric::Cubic => Array2::from_shape_fn((query.nrows(), train.nrows()), |(i, j)| {
            cubic_key(query.row(i), train.row(j))
        }),
    }
}

fn cubic_key(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().powi(3)).sum()
}

/// Indices of the `k` nearest training rows, nearest first.
pub fn nearest(keys: &[f64], k: usize) -> Vec<usize> {
    let cmp = |&a: &usize, &b: &usize| -> Ordering { keys[a].total_cmp(&keys[b]).then(a.cmp(&b)) };
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    let k = k.min(idx.len());
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Defect vote share minus one half among the `k` nearest rows.
pub(crate) fn vote(keys: &[f64], labels: &[u8], k: usize, metric: Metric, weighted: bool) -> f64 {
    let nn = nearest(keys, k);
    let (mut w0, mut w1) = (0.0, 0.0);
    if weighted {
        let exact: Vec<usize> = nn.iter().copied().filter(|&i| keys[i] == 0.0).collect();
        if exact.is_empty() {
            for &i in &nn {
                let d2 = match metric {
                    Metric::Euclidean => keys[i],
                    Metric::Cosine => keys[i] * keys[i],
                    Metric::Cubic => keys[i].cbrt().powi(2),
                };
                if labels[i] == 1 {
                    w1 += 1.0 / d2;
                } else {
                    w0 += 1.0 / d2;
                }
            }
        } else {
            for &i in &exact {
                if labels[i] == 1 {
                    w1 += 1.0;
                } else {
                    w0 += 1.0;
                }
            }
        }
    } else {
        for &i in &nn {
            if labels[i] == 1 {
                w1 += 1.0;
            } else {
                w0 += 1.0;
            }
        }
    }
    w1 / (w0 + w1) - 0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    variant: KnnVariant,
    standardizer: Standardizer,
    train: Array2<f64>,
    norms: Vec<f64>,
    labels: Vec<u8>,
}

impl KnnModel {
    pub fn fit(data: &Dataset, variant: KnnVariant) -> Result<Self> {
        let k = variant.k();
        if data.n_samples() < k {
            return Err(Error::TooFewSamples {
                needed: k,
                got: data.n_samples(),
            });
        }
        let standardizer = Standardizer::fit(data.features());
        let train = standardizer.transform(data.features());
        let norms = super::svm::squared_norms(train.view());
        Ok(Self {
            variant,
            standardizer,
            train,
            norms,
            labels: data.labels().to_vec(),
        })
    }

    pub fn variant(&self) -> KnnVariant {
        self.variant
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.n_features()
    }

    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let z = self.standardizer.transform(x);
        let metric = self.variant.metric();
        let keys = distance_keys(metric, z.view(), self.train.view(), &self.norms);
        keys.rows()
            .into_iter()
            .map(|row| {
                vote(
                    row.as_slice().expect("contiguous"),
                    &self.labels,
                    self.variant.k(),
                    metric,
                    self.variant.weighted(),
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn exact_match_returns_its_label() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        let d = Dataset::from_parts(x.clone(), vec![0, 1, 0, 1]).unwrap();
        let m = KnnModel::fit(&d, KnnVariant::Fine).unwrap();
        let s = m.scores(x.view());
        let pred: Vec<u8> = s.iter().map(|&v| u8::from(v > 0.0)).collect();
        assert_eq!(pred, vec![0, 1, 0, 1]);
    }

    #[test]
    fn seven_of_ten_votes() {
        let keys: Vec<f64> = (0..12).map(f64::from).collect();
        let labels = [1, 1, 1, 0, 1, 0, 1, 1, 0, 1, 0, 0];
        let s = vote(&keys, &labels, 10, Metric::Euclidean, false);
        assert!((s - 0.2).abs() < 1e-12);
    }

    #[test]
    fn even_split_goes_to_class_zero() {
        let keys = [1.0, 2.0];
        assert_eq!(vote(&keys, &[1, 0], 2, Metric::Euclidean, false), 0.0);
    }

    #[test]
    fn ties_prefer_lower_index() {
        assert_eq!(nearest(&[3.0, 1.0, 1.0, 0.5], 2), vec![3, 1]);
        assert_eq!(nearest(&[2.0, 2.0, 2.0], 2), vec![0, 1]);
    }

    #[test]
    fn weighted_exact_match_wins() {
        let keys = [0.0, 0.01, 0.01, 0.01];
        assert!(vote(&keys, &[0, 1, 1, 1], 4, Metric::Euclidean, true) < 0.0);
        // without the exact match the closest pair dominates
        let keys = [1.0, 4.0, 4.0, 4.0];
        let s = vote(&keys, &[1, 0, 0, 0], 4, Metric::Euclidean, true);
        assert!((s - (1.0 / (1.0 + 0.75) - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn cosine_ignores_length() {
        let t = array![[1.0, 0.0], [0.0, 1.0]];
        let norms = super::super::svm::squared_norms(t.view());
        let q = array![[10.0, 1.0], [0.0, 0.0]];
        let d = distance_keys(Metric::Cosine, q.view(), t.view(), &norms);
        assert!(d[[0, 0]] < d[[0, 1]]);
        assert_eq!(d[[1, 0]], 1.0);
    }

    #[test]
    fn too_few_samples() {
        let d = Dataset::from_parts(Array2::zeros((5, 2)), vec![0, 1, 0, 1, 0]).unwrap();
        assert!(matches!(
            KnnModel::fit(&d, KnnVariant::Medium),
            Err(Error::TooFewSamples { needed: 10, got: 5 })
        ));
    }
}
