//! Supervised binary classifiers: trees, SVMs, kNN, linear discriminant and
//! five ensembles, behind one [`ClassifierSpec`] / [`TrainedModel`] pair.
//!
//! Every model produces a real score; the predicted label is 1 iff the score
//! is strictly positive.

pub mod ensemble;
pub mod knn;
pub mod lda;
mod persist;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use self::ensemble::{BaggedTrees, BaggingOptions, BoostedTrees, SubspaceEnsemble, DEFAULT_LEARNERS};
pub use self::knn::{KnnModel, KnnVariant, Metric};
pub use self::lda::LdaModel;
pub use self::svm::{Kernel, SmoOptions, SvmModel};
pub use self::tree::{DecisionTree, TreeOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Tree,
    Svm,
    Knn,
    Ensemble,
    Lda,
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    FineTree,
    MediumTree,
    CoarseTree,
    LinearSvm,
    QuadraticSvm,
    CubicSvm,
    FineGaussianSvm,
    MediumGaussianSvm,
    CoarseGaussianSvm,
    FineKnn,
    MediumKnn,
    CoarseKnn,
    CosineKnn,
    CubicKnn,
    WeightedKnn,
    BoostedTrees,
    BaggedTrees,
    SubspaceDiscriminant,
    SubspaceKnn,
    RusBoostedTrees,
    LinearDiscriminant,
    Majority,
}

impl ClassifierKind {
    /// Every kind, results-table rows first.
    pub const ALL: [ClassifierKind; 22] = [
        ClassifierKind::FineTree,
        ClassifierKind::MediumTree,
        ClassifierKind::CoarseTree,
        ClassifierKind::LinearSvm,
        ClassifierKind::QuadraticSvm,
        ClassifierKind::CubicSvm,
        ClassifierKind::FineGaussianSvm,
        ClassifierKind::MediumGaussianSvm,
        ClassifierKind::CoarseGaussianSvm,
        ClassifierKind::FineKnn,
        ClassifierKind::MediumKnn,
        ClassifierKind::CoarseKnn,
        ClassifierKind::CosineKnn,
        ClassifierKind::CubicKnn,
        ClassifierKind::WeightedKnn,
        ClassifierKind::BoostedTrees,
        ClassifierKind::BaggedTrees,
        ClassifierKind::SubspaceDiscriminant,
        ClassifierKind::SubspaceKnn,
        ClassifierKind::RusBoostedTrees,
        ClassifierKind::LinearDiscriminant,
        ClassifierKind::Majority,
    ];

    /// The rows of a results grid.
    pub fn grid() -> &'static [ClassifierKind] {
        &Self::ALL[..20]
    }

    pub fn family(self) -> Family {
        use ClassifierKind::*;
        match self {
            FineTree | MediumTree | CoarseTree => Family::Tree,
            LinearSvm | QuadraticSvm | CubicSvm | FineGaussianSvm | MediumGaussianSvm
            | CoarseGaussianSvm => Family::Svm,
            FineKnn | MediumKnn | CoarseKnn | CosineKnn | CubicKnn | WeightedKnn => Family::Knn,
            BoostedTrees | BaggedTrees | SubspaceDiscriminant | SubspaceKnn | RusBoostedTrees => {
                Family::Ensemble
            }
            LinearDiscriminant => Family::Lda,
            Majority => Family::Baseline,
        }
    }

    /// Command-line name, e.g. `fine-gaussian-svm`.
    pub fn name(self) -> &'static str {
        use ClassifierKind::*;
        match self {
            FineTree => "fine-tree",
            MediumTree => "medium-tree",
            CoarseTree => "coarse-tree",
            LinearSvm => "linear-svm",
            QuadraticSvm => "quadratic-svm",
            CubicSvm => "cubic-svm",
            FineGaussianSvm => "fine-gaussian-svm",
            MediumGaussianSvm => "medium-gaussian-svm",
            CoarseGaussianSvm => "coarse-gaussian-svm",
            FineKnn => "fine-knn",
            MediumKnn => "medium-knn",
            CoarseKnn => "coarse-knn",
            CosineKnn => "cosine-knn",
            CubicKnn => "cubic-knn",
            WeightedKnn => "weighted-knn",
            BoostedTrees => "boosted-trees",
            BaggedTrees => "bagged-trees",
            SubspaceDiscriminant => "subspace-discriminant",
            SubspaceKnn => "subspace-knn",
            RusBoostedTrees => "rusboosted-trees",
            LinearDiscriminant => "lda",
            Majority => "majority",
        }
    }

    /// Human-readable row label, e.g. `Fine Gaussian SVM`.
    pub fn label(self) -> &'static str {
        use ClassifierKind::*;
        match self {
            FineTree => "Fine Tree",
            MediumTree => "Medium Tree",
            CoarseTree => "Coarse Tree",
            LinearSvm => "Linear SVM",
            QuadraticSvm => "Quadratic SVM",
            CubicSvm => "Cubic SVM",
            FineGaussianSvm => "Fine Gaussian SVM",
            MediumGaussianSvm => "Medium Gaussian SVM",
            CoarseGaussianSvm => "Coarse Gaussian SVM",
            FineKnn => "Fine KNN",
            MediumKnn => "Medium KNN",
            CoarseKnn => "Coarse KNN",
            CosineKnn => "Cosine KNN",
            CubicKnn => "Cubic KNN",
            WeightedKnn => "Weighted KNN",
            BoostedTrees => "Boosted Trees",
            BaggedTrees => "Bagged Trees",
            SubspaceDiscriminant => "Subspace Discriminant",
            SubspaceKnn => "Subspace KNN",
            RusBoostedTrees => "RUSBoosted Trees",
            LinearDiscriminant => "Linear Discriminant",
            Majority => "Majority",
        }
    }

    fn code(self) -> u16 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u16
    }

    fn from_code(code: u16) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '_'], "-");
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == key || k.label().to_ascii_lowercase().replace(' ', "-") == key)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown classifier '{s}'; valid: {}",
                    Self::valid_names()
                ))
            })
    }
}

/// What to train and how.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    /// Ensemble size.
    pub n_learners: usize,
    /// Explicit kernel scale σ, overriding the variant's rule.
    pub kernel_scale: Option<f64>,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            n_learners: DEFAULT_LEARNERS,
            kernel_scale: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn family(&self) -> Family {
        self.kind.family()
    }

    pub fn validate(&self) -> Result<()> {
        if self.family() == Family::Ensemble && self.n_learners == 0 {
            return Err(Error::InvalidParams("n_learners must be at least 1".into()));
        }
        if let Some(s) = self.kernel_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParams(format!("kernel scale must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// SVM kernel for `p` predictors; `None` for non-SVM kinds.
    pub fn kernel(&self, p: usize) -> Option<Kernel> {
        let root = (p as f64).sqrt();
        let scale = |default: f64| self.kernel_scale.unwrap_or(default);
        Some(match self.kind {
            ClassifierKind::LinearSvm => Kernel::Linear,
            ClassifierKind::QuadraticSvm => Kernel::Polynomial {
                degree: 2,
                scale: scale(root),
            },
            ClassifierKind::CubicSvm => Kernel::Polynomial {
                degree: 3,
                scale: scale(root),
            },
            ClassifierKind::FineGaussianSvm => Kernel::Gaussian {
                scale: scale(root / 4.0),
            },
            ClassifierKind::MediumGaussianSvm => Kernel::Gaussian { scale: scale(root) },
            ClassifierKind::CoarseGaussianSvm => Kernel::Gaussian {
                scale: scale(4.0 * root),
            },
            _ => return None,
        })
    }

    pub fn fit(&self, data: &Dataset) -> Result<TrainedModel> {
        fit(self, data)
    }
}

/// Always predicts the training majority.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorityModel {
    defect_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Params {
    Tree(DecisionTree),
    Svm(SvmModel),
    Knn(KnnModel),
    Lda(LdaModel),
    Boosted(BoostedTrees),
    Bagged(BaggedTrees),
    Subspace(SubspaceEnsemble),
    Majority(MajorityModel),
}

/// Immutable fitted classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    kind: ClassifierKind,
    n_features: usize,
    params: Params,
}

pub fn fit(spec: &ClassifierSpec, data: &Dataset) -> Result<TrainedModel> {
    use ClassifierKind::*;
    spec.validate()?;
    let p = data.n_features();
    let seed = spec.seed;
    let params = match spec.kind {
        FineTree | MediumTree | CoarseTree => {
            let splits = match spec.kind {
                FineTree => 100,
                MediumTree => 20,
                _ => 4,
            };
            Params::Tree(tree::fit_tree(
                data.features(),
                data.labels(),
                TreeOptions::with_splits(splits),
                seed,
            ))
        }
        LinearSvm | QuadraticSvm | CubicSvm | FineGaussianSvm | MediumGaussianSvm
        | CoarseGaussianSvm => {
            let kernel = spec.kernel(p).expect("svm kind");
            Params::Svm(SvmModel::fit(data, kernel, SmoOptions::default())?)
        }
        FineKnn | MediumKnn | CoarseKnn | CosineKnn | CubicKnn | WeightedKnn => {
            let variant = match spec.kind {
                FineKnn => KnnVariant::Fine,
                MediumKnn => KnnVariant::Medium,
                CoarseKnn => KnnVariant::Coarse,
                CosineKnn => KnnVariant::Cosine,
                CubicKnn => KnnVariant::Cubic,
                _ => KnnVariant::Weighted,
            };
            Params::Knn(KnnModel::fit(data, variant)?)
        }
        LinearDiscriminant => Params::Lda(LdaModel::fit(data)?),
        BoostedTrees => Params::Boosted(ensemble::BoostedTrees::fit(data, spec.n_learners, false, seed)?),
        RusBoostedTrees => Params::Boosted(ensemble::BoostedTrees::fit(data, spec.n_learners, true, seed)?),
        BaggedTrees => Params::Bagged(ensemble::BaggedTrees::fit(
            data,
            BaggingOptions {
                n_learners: spec.n_learners,
                ..BaggingOptions::default()
            },
            seed,
        )?),
        SubspaceDiscriminant => {
            Params::Subspace(SubspaceEnsemble::fit_discriminant(data, spec.n_learners, seed)?)
        }
        SubspaceKnn => Params::Subspace(SubspaceEnsemble::fit_knn(data, spec.n_learners, seed)?),
        Majority => {
            let [_, ones] = data.class_counts();
            Params::Majority(MajorityModel {
                defect_fraction: ones as f64 / data.n_samples() as f64,
            })
        }
    };
    Ok(TrainedModel {
        kind: spec.kind,
        n_features: p,
        params,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn check(&self, got: usize) -> Result<()> {
        if got == self.n_features {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n_features,
                got,
            })
        }
    }

    /// Scores for every row of `x`.
    pub fn score_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check(x.ncols())?;
        let per_row = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> {
            x.rows()
                .into_iter()
                .map(|r| match r.as_slice() {
                    Some(s) => f(s),
                    None => f(&r.to_vec()),
                })
                .collect()
        };
        Ok(match &self.params {
            Params::Tree(t) => per_row(&|r| t.score(r)),
            Params::Svm(m) => m.decision(x),
            Params::Knn(m) => m.scores(x),
            Params::Lda(m) => m.scores(x),
            Params::Boosted(m) => per_row(&|r| m.score(r)),
            Params::Bagged(m) => per_row(&|r| m.score(r)),
            Params::Subspace(m) => m.scores(x),
            Params::Majority(m) => vec![m.defect_fraction - 0.5; x.nrows()],
        })
    }

    pub fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        Ok(self
            .score_batch(x)?
            .into_iter()
            .map(|s| u8::from(s > 0.0))
            .collect())
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check(x.len())?;
        let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("one row");
        Ok(self.score_batch(row.view())?[0])
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.score(x)? > 0.0))
    }

    pub fn as_svm(&self) -> Option<&SvmModel> {
        match &self.params {
            Params::Svm(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_boosted(&self) -> Option<&BoostedTrees> {
        match &self.params {
            Params::Boosted(m) => Some(m),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> Dataset {
        Dataset::from_parts(
            array![
                [0.0, 0.1],
                [0.2, 0.0],
                [0.1, 0.3],
                [1.0, 1.1],
                [0.9, 1.2],
                [1.2, 0.8],
                [0.3, 0.2],
                [1.1, 1.0],
                [0.0, 0.4],
                [0.8, 0.9],
                [0.25, 0.15],
                [1.05, 0.95]
            ],
            vec![0, 0, 0, 1, 1, 1, 0, 1, 0, 1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.name().parse::<ClassifierKind>().unwrap(), k);
            assert_eq!(k.label().parse::<ClassifierKind>().unwrap(), k);
            assert_eq!(ClassifierKind::from_code(k.code()), Some(k));
        }
        assert!("huge-svm".parse::<ClassifierKind>().is_err());
        assert_eq!(ClassifierKind::grid().len(), 20);
    }

    #[test]
    fn medium_gaussian_scale_is_root_p() {
        let spec = ClassifierSpec::new(ClassifierKind::MediumGaussianSvm);
        assert_eq!(spec.kernel(1600), Some(Kernel::Gaussian { scale: 40.0 }));
        let fine = ClassifierSpec::new(ClassifierKind::FineGaussianSvm);
        assert_eq!(fine.kernel(1600), Some(Kernel::Gaussian { scale: 10.0 }));
    }

    #[test]
    fn every_kind_fits_and_separates_toy_data() {
        let d = toy();
        for kind in ClassifierKind::ALL {
            if kind == ClassifierKind::Majority || kind == ClassifierKind::CoarseKnn {
                continue;
            }
            let m = ClassifierSpec::new(kind).with_seed(1).fit(&d).unwrap();
            let pred = m.predict_batch(d.features()).unwrap();
            let acc = pred.iter().zip(d.labels()).filter(|(a, b)| a == b).count();
            assert!(acc >= 11, "{kind}: {acc}/12");
        }
    }

    #[test]
    fn dimension_is_checked() {
        let m = ClassifierSpec::new(ClassifierKind::FineKnn).fit(&toy()).unwrap();
        assert!(matches!(
            m.predict(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn majority_predicts_the_larger_class() {
        let x = Array2::zeros((10, 1));
        let y = vec![0, 0, 0, 0, 0, 0, 0, 0, 1, 1];
        let m = ClassifierSpec::new(ClassifierKind::Majority)
            .fit(&Dataset::from_parts(x, y).unwrap())
            .unwrap();
        assert_eq!(m.predict(&[5.0]).unwrap(), 0);
    }
}
