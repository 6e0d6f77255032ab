//! Tree and subspace ensembles.
//!
//! Every ensemble scores a sample as its (weighted) defect vote share minus
//! one half.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::knn::{distance_keys, vote, KnnVariant};
use super::lda::{DiscriminantStats, LinearDiscriminant};
use super::svm::squared_norms;
use super::tree::{DecisionTree, TreeGrower, TreeOptions};
use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};

pub const DEFAULT_LEARNERS: usize = 30;
pub const BOOST_SPLITS: usize = 20;
pub const BAG_SPLITS: usize = 100;
/// Weighted error substituted for a perfect round so its vote stays finite.
const MIN_ERROR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// A round fitted the weighted data perfectly.
    PerfectRound(usize),
    /// A round did no better than chance.
    WeakRound(usize),
}

/// AdaBoost.M1 ensemble; with `undersample` every round trains on all
/// minority samples plus an equally large random draw from the majority.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    learners: Vec<DecisionTree>,
    alphas: Vec<f64>,
    stop: Option<StopReason>,
}

/// Weighted error of every round, recorded during fitting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoostTrace {
    pub errors: Vec<f64>,
    pub pool_sizes: Vec<usize>,
}

/// Indices of one undersampled round: the whole minority class plus a
/// uniform draw of the same size from the majority class.
pub fn undersample<R: Rng>(labels: &[u8], rng: &mut R) -> Vec<usize> {
    let (ones, zeros): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i] == 1);
    let (minority, majority) = if ones.len() <= zeros.len() {
        (ones, zeros)
    } else {
        (zeros, ones)
    };
    let mut pool = minority.clone();
    pool.extend(
        index::sample(rng, majority.len(), minority.len())
            .into_iter()
            .map(|k| majority[k]),
    );
    pool.sort_unstable();
    pool
}

impl BoostedTrees {
    pub fn fit(data: &Dataset, n_learners: usize, undersampling: bool, seed: u64) -> Result<Self> {
        Self::fit_traced(data, n_learners, undersampling, seed).map(|(m, _)| m)
    }

    pub fn fit_traced(
        data: &Dataset,
        n_learners: usize,
        undersampling: bool,
        seed: u64,
    ) -> Result<(Self, BoostTrace)> {
        data.require_both_classes()?;
        check_learners(n_learners)?;
        let n = data.n_samples();
        let labels = data.labels();
        let grower = TreeGrower::new(data.features());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = vec![1.0 / n as f64; n];
        let mut model = BoostedTrees {
            learners: Vec::new(),
            alphas: Vec::new(),
            stop: None,
        };
        let mut trace = BoostTrace::default();
        let opts = TreeOptions::with_splits(BOOST_SPLITS);
        for round in 0..n_learners {
            let train_weights = if undersampling {
                let pool = undersample(labels, &mut rng);
                trace.pool_sizes.push(pool.len());
                let mut w = vec![0.0; n];
                for &i in &pool {
                    w[i] = weights[i];
                }
                w
            } else {
                weights.clone()
            };
            let tree = grower.grow(labels, &train_weights, opts, &mut rng);
            let wrong: Vec<bool> = data
                .features()
                .rows()
                .into_iter()
                .zip(labels)
                .map(|(r, &l)| tree.predict(r.as_slice().expect("contiguous")) != l)
                .collect();
            let total: f64 = weights.iter().sum();
            let err = wrong
                .iter()
                .zip(&weights)
                .filter(|(&w, _)| w)
                .map(|(_, &w)| w)
                .sum::<f64>()
                / total;
            trace.errors.push(err);
            if err >= 0.5 {
                if model.learners.is_empty() {
                    model.learners.push(tree);
                    model.alphas.push(1.0);
                }
                model.stop = Some(StopReason::WeakRound(round));
                break;
            }
            let alpha = 0.5 * ((1.0 - err.max(MIN_ERROR)) / err.max(MIN_ERROR)).ln();
            model.learners.push(tree);
            model.alphas.push(alpha);
            if err == 0.0 {
                model.stop = Some(StopReason::PerfectRound(round));
                break;
            }
            let mut sum = 0.0;
            for (w, &bad) in weights.iter_mut().zip(&wrong) {
                *w *= if bad { alpha.exp() } else { (-alpha).exp() };
                sum += *w;
            }
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        Ok((model, trace))
    }

    pub fn n_learners(&self) -> usize {
        self.learners.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    /// Score using only the first `rounds` learners.
    pub fn score_truncated(&self, x: &[f64], rounds: usize) -> f64 {
        let (mut yes, mut total) = (0.0, 0.0);
        for (t, &a) in self.learners.iter().zip(&self.alphas).take(rounds) {
            total += a;
            if t.predict(x) == 1 {
                yes += a;
            }
        }
        yes / total - 0.5
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.score_truncated(x, self.learners.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaggingOptions {
    pub n_learners: usize,
    pub bootstrap: bool,
    pub feature_subsampling: bool,
}

impl Default for BaggingOptions {
    fn default() -> Self {
        Self {
            n_learners: DEFAULT_LEARNERS,
            bootstrap: true,
            feature_subsampling: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    trees: Vec<DecisionTree>,
}

impl BaggedTrees {
    pub fn fit(data: &Dataset, opts: BaggingOptions, seed: u64) -> Result<Self> {
        data.require_both_classes()?;
        check_learners(opts.n_learners)?;
        let n = data.n_samples();
        let p = data.n_features();
        let grower = TreeGrower::new(data.features());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree_opts = TreeOptions {
            max_splits: BAG_SPLITS,
            max_features: opts
                .feature_subsampling
                .then(|| ((p as f64).sqrt().ceil() as usize).max(1)),
        };
        let mut trees = Vec::with_capacity(opts.n_learners);
        for _ in 0..opts.n_learners {
            let mut weights = vec![0.0; n];
            if opts.bootstrap {
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1.0);
            }
            trees.push(grower.grow(data.labels(), &weights, tree_opts, &mut rng));
        }
        Ok(Self { trees })
    }

    pub fn n_learners(&self) -> usize {
        self.trees.len()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let yes = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        yes as f64 / self.trees.len() as f64 - 0.5
    }
}

/// Random-subspace ensemble: every member sees ⌈P/2⌉ columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SubspaceEnsemble {
    Discriminant {
        standardizer: Standardizer,
        members: Vec<LinearDiscriminant>,
    },
    Knn {
        standardizer: Standardizer,
        train: Array2<f64>,
        labels: Vec<u8>,
        members: Vec<Vec<usize>>,
    },
}

pub fn subspace_width(p: usize) -> usize {
    p.div_ceil(2)
}

fn draw_subspaces(p: usize, n_learners: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = subspace_width(p);
    (0..n_learners)
        .map(|_| {
            let mut cols = index::sample(&mut rng, p, m).into_vec();
            cols.sort_unstable();
            cols
        })
        .collect()
}

impl SubspaceEnsemble {
    pub fn fit_discriminant(data: &Dataset, n_learners: usize, seed: u64) -> Result<Self> {
        check_learners(n_learners)?;
        let stats = DiscriminantStats::fit(data)?;
        let members = draw_subspaces(data.n_features(), n_learners, seed)
            .iter()
            .map(|cols| stats.discriminant(Some(cols)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Discriminant {
            standardizer: stats.standardizer,
            members,
        })
    }

    pub fn fit_knn(data: &Dataset, n_learners: usize, seed: u64) -> Result<Self> {
        data.require_both_classes()?;
        check_learners(n_learners)?;
        let k = KnnVariant::Medium.k();
        if data.n_samples() < k {
            return Err(Error::TooFewSamples {
                needed: k,
                got: data.n_samples(),
            });
        }
        let standardizer = Standardizer::fit(data.features());
        let train = standardizer.transform(data.features());
        Ok(Self::Knn {
            standardizer,
            train,
            labels: data.labels().to_vec(),
            members: draw_subspaces(data.n_features(), n_learners, seed),
        })
    }

    pub fn n_learners(&self) -> usize {
        match self {
            Self::Discriminant { members, .. } => members.len(),
            Self::Knn { members, .. } => members.len(),
        }
    }

    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut yes = vec![0usize; x.nrows()];
        let members;
        match self {
            Self::Discriminant {
                standardizer,
                members: m,
            } => {
                members = m.len();
                let z = standardizer.transform(x);
                for d in m {
                    for (i, row) in z.rows().into_iter().enumerate() {
                        if d.score_z(row) > 0.0 {
                            yes[i] += 1;
                        }
                    }
                }
            }
            Self::Knn {
                standardizer,
                train,
                labels,
                members: m,
            } => {
                members = m.len();
                let z = standardizer.transform(x);
                let variant = KnnVariant::Medium;
                for cols in m {
                    let q = z.select(Axis(1), cols);
                    let t = train.select(Axis(1), cols);
                    let norms = squared_norms(t.view());
                    let keys = distance_keys(variant.metric(), q.view(), t.view(), &norms);
                    for (i, row) in keys.rows().into_iter().enumerate() {
                        let s = vote(
                            row.as_slice().expect("contiguous"),
                            labels,
                            variant.k(),
                            variant.metric(),
                            false,
                        );
                        if s > 0.0 {
                            yes[i] += 1;
                        }
                    }
                }
            }
        }
        yes.iter().map(|&v| v as f64 / members as f64 - 0.5).collect()
    }
}

fn check_learners(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParams("an ensemble needs at least one learner".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::tree::fit_tree;
    use ndarray::Array2;

    fn noisy_threshold(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, 1), |_| rng.random::<f64>());
        let y = x
            .column(0)
            .iter()
            .map(|&v| u8::from((v > 0.5) ^ (rng.random::<f64>() < 0.1)))
            .collect();
        Dataset::from_parts(x, y).unwrap()
    }

    #[test]
    fn single_unbootstrapped_bag_equals_fine_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((120, 3), |_| rng.random::<f64>());
        let y: Vec<u8> = x.rows().into_iter().map(|r| u8::from(r[0] + r[1] * r[2] > 0.7)).collect();
        let d = Dataset::from_parts(x.clone(), y.clone()).unwrap();
        let bag = BaggedTrees::fit(
            &d,
            BaggingOptions {
                n_learners: 1,
                bootstrap: false,
                feature_subsampling: false,
            },
            7,
        )
        .unwrap();
        let tree = fit_tree(x.view(), &y, TreeOptions::with_splits(BAG_SPLITS), 0);
        for r in x.rows() {
            let r = r.as_slice().unwrap();
            assert_eq!(u8::from(bag.score(r) > 0.0), tree.predict(r));
        }
    }

    #[test]
    fn undersampled_pool_is_balanced() {
        let labels: Vec<u8> = (0..2378).map(|i| u8::from(i < 475)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pool = undersample(&labels, &mut rng);
        assert_eq!(pool.len(), 950);
        assert_eq!(pool.iter().filter(|&&i| labels[i] == 1).count(), 475);
    }

    #[test]
    fn perfect_round_stops_boosting() {
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let y = (0..10).map(|i| u8::from(i >= 5)).collect();
        let d = Dataset::from_parts(x, y).unwrap();
        let m = BoostedTrees::fit(&d, 30, false, 0).unwrap();
        assert_eq!(m.n_learners(), 1);
        assert_eq!(m.stop_reason(), Some(StopReason::PerfectRound(0)));
        assert!(m.score(&[7.0]) > 0.0 && m.score(&[2.0]) < 0.0);
    }

    #[test]
    fn boosting_is_deterministic() {
        let d = noisy_threshold(200, 1);
        let a = BoostedTrees::fit(&d, 10, true, 5).unwrap();
        let b = BoostedTrees::fit(&d, 10, true, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subspace_members_use_half_the_columns() {
        assert_eq!(subspace_width(1600), 800);
        assert_eq!(subspace_width(59), 30);
        let subs = draw_subspaces(7, 5, 3);
        assert!(subs.iter().all(|c| c.len() == 4 && c.windows(2).all(|w| w[0] < w[1])));
    }
}
