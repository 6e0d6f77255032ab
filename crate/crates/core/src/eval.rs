//! Evaluation protocol: confusion matrices, stratified k-fold and holdout
//! splits, pooled cross-validation, ROC curves and results tables.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierKind, ClassifierSpec};
use crate::dataset::{class_counts, Dataset};
use crate::error::{Error, Result};

/// Rows are actual classes, columns predicted classes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tn: usize, fp: usize, fn_: usize, tp: usize) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn from_predictions(labels: &[u8], predicted: &[u8]) -> Self {
        let mut cm = Self::default();
        for (&l, &p) in labels.iter().zip(predicted) {
            cm.record(l, p);
        }
        cm
    }

    pub fn record(&mut self, actual: u8, predicted: u8) {
        match (actual, predicted) {
            (1, 1) => self.tp += 1,
            (0, 0) => self.tn += 1,
            (0, _) => self.fp += 1,
            _ => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Result<f64> {
        accuracy(self)
    }

    pub fn merge(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            tn: self.tn + other.tn,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }

    /// The same matrix with the class labels exchanged.
    pub fn relabeled(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }

    /// 2x2 CSV: `actual,predicted_0,predicted_1`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "actual,predicted_0,predicted_1")?;
        writeln!(out, "0,{},{}", self.tn, self.fp)?;
        writeln!(out, "1,{},{}", self.fn_, self.tp)?;
        Ok(())
    }
}

/// `(tp + tn) / (tp + fp + tn + fn)`.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok((cm.tp + cm.tn) as f64 / total as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// ROC over every distinct score. A sample counts as positive at threshold
/// `t` when its score exceeds `t`; the curve starts at the largest score
/// (nothing positive) and ends at `-∞` (everything positive).
pub fn roc(labels: &[u8], scores: &[f64]) -> Result<RocCurve> {
    let [neg, pos] = class_counts(labels);
    if neg == 0 || pos == 0 {
        return Err(Error::SingleClassLabels);
    }
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    Ok(RocCurve { points })
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    /// Thresholds strictly decreasing, rates non-decreasing and in [0, 1],
    /// endpoints at (0, 0) and (1, 1).
    pub fn is_valid(&self) -> bool {
        let (Some(first), Some(last)) = (self.points.first(), self.points.last()) else {
            return false;
        };
        first.fpr == 0.0
            && first.tpr == 0.0
            && last.fpr == 1.0
            && last.tpr == 1.0
            && self.points.iter().all(|p| (0.0..=1.0).contains(&p.fpr) && (0.0..=1.0).contains(&p.tpr))
            && self.points.windows(2).all(|w| {
                w[1].threshold < w[0].threshold && w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr
            })
    }

    /// CSV with header `threshold,fpr,tpr`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "threshold,fpr,tpr")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub per_fold: Option<Vec<f64>>,
    pub roc: Option<RocCurve>,
    /// Score of every evaluated sample, in evaluation order.
    pub scores: Vec<f64>,
}

impl EvalReport {
    pub fn from_scores(labels: &[u8], scores: Vec<f64>) -> Result<Self> {
        let predicted: Vec<u8> = scores.iter().map(|&s| u8::from(s > 0.0)).collect();
        Self::from_parts(labels, &predicted, scores)
    }

    /// Report whose predictions are supplied explicitly (for scores that are
    /// not thresholded at zero).
    pub fn from_parts(labels: &[u8], predicted: &[u8], scores: Vec<f64>) -> Result<Self> {
        let confusion = ConfusionMatrix::from_predictions(labels, predicted);
        let accuracy = accuracy(&confusion)?;
        let roc = roc(labels, &scores).ok();
        Ok(Self {
            confusion,
            accuracy,
            per_fold: None,
            roc,
            scores,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold partition. Each class is shuffled and dealt
/// round-robin over the folds, the dealer continuing where the previous
/// class stopped, so fold sizes and per-fold class counts differ by at most
/// one. Every class needs at least `k` members unless `k` equals the sample
/// count (leave-one-out).
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k < 2 || k > n {
        return Err(Error::InvalidParams(format!("k = {k} for {n} samples")));
    }
    let counts = class_counts(labels);
    if k < n {
        for (class, &count) in counts.iter().enumerate() {
            if count < k {
                return Err(Error::TooFewPerClass {
                    class: class as u8,
                    count,
                    k,
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    let mut dealer = 0;
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = dealer % k;
            dealer += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

/// Train/test percentages allowed for holdout experiments.
pub const HOLDOUT_SPLITS: [u8; 6] = [70, 75, 80, 85, 90, 95];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Split {
    train_percent: u8,
}

impl Split {
    pub fn new(train_percent: u8) -> Result<Self> {
        if HOLDOUT_SPLITS.contains(&train_percent) {
            Ok(Self { train_percent })
        } else {
            Err(Error::InvalidParams(format!(
                "split {train_percent}/{} is not one of 70/30, 75/25, 80/20, 85/15, 90/10, 95/5",
                100u8.saturating_sub(train_percent)
            )))
        }
    }

    pub fn all() -> Vec<Split> {
        HOLDOUT_SPLITS.iter().map(|&p| Split { train_percent: p }).collect()
    }

    pub fn train_percent(self) -> u8 {
        self.train_percent
    }

    pub fn test_fraction(self) -> f64 {
        f64::from(100 - self.train_percent) / 100.0
    }

    /// Test-set size for `n` samples.
    pub fn test_count(self, n: usize) -> usize {
        (n * usize::from(100 - self.train_percent) + 50) / 100
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.train_percent, 100 - self.train_percent)
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let head = s.split('/').next().unwrap_or("").trim();
        let p: u8 = head
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad split '{s}'")))?;
        if let Some(tail) = s.split('/').nth(1) {
            if tail.trim().parse::<u16>().ok() != Some(100 - u16::from(p.min(100))) {
                return Err(Error::InvalidParams(format!("bad split '{s}'")));
            }
        }
        Split::new(p)
    }
}

/// Stratified random holdout. The overall test size is `split.test_count(n)`;
/// it is shared between classes by largest remainder.
pub fn stratified_holdout(labels: &[u8], split: Split, seed: u64) -> Result<Fold> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let counts = class_counts(labels);
    let total_test = split.test_count(n);
    let exact: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 * total_test as f64 / n as f64)
        .collect();
    let mut take: Vec<usize> = exact.iter().map(|v| v.floor() as usize).collect();
    let mut rest = total_test - take.iter().sum::<usize>();
    let mut by_remainder = [0usize, 1];
    by_remainder.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for c in by_remainder {
        if rest > 0 && take[c] < counts[c] {
            take[c] += 1;
            rest -= 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..take[class as usize]]);
        train.extend_from_slice(&members[take[class as usize]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Fold { train, test })
}

/// SplitMix64 finalizer; used to derive independent seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// k-fold cross-validation with a pooled confusion matrix. Fold `f` trains
/// its model with seed `mix_seed(spec.seed, f)`. `scores` in the report are
/// aligned with the dataset rows.
pub fn cross_validate(data: &Dataset, spec: &ClassifierSpec, k: usize, seed: u64) -> Result<EvalReport> {
    let folds = stratified_kfold(data.labels(), k, seed)?;
    let results: Vec<Result<(Vec<usize>, Vec<f64>)>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let train = data.subset(&fold.train);
            let test = data.subset(&fold.test);
            let fold_spec = ClassifierSpec {
                seed: mix_seed(spec.seed, f as u64),
                ..*spec
            };
            let model = fold_spec.fit(&train)?;
            Ok((fold.test.clone(), model.score_batch(test.features())?))
        })
        .collect();
    let mut scores = vec![0.0; data.n_samples()];
    let mut per_fold = Vec::with_capacity(k);
    let mut confusion = ConfusionMatrix::default();
    for r in results {
        let (idx, s) = r?;
        let mut cm = ConfusionMatrix::default();
        for (&i, &v) in idx.iter().zip(&s) {
            scores[i] = v;
            cm.record(data.labels()[i], u8::from(v > 0.0));
        }
        per_fold.push(accuracy(&cm)?);
        confusion = confusion.merge(&cm);
    }
    Ok(EvalReport {
        confusion,
        accuracy: accuracy(&confusion)?,
        per_fold: Some(per_fold),
        roc: roc(data.labels(), &scores).ok(),
        scores,
    })
}

/// Single stratified train/test run.
pub fn holdout(data: &Dataset, spec: &ClassifierSpec, split: Split, seed: u64) -> Result<EvalReport> {
    let fold = stratified_holdout(data.labels(), split, seed)?;
    let model = spec.fit(&data.subset(&fold.train))?;
    let test = data.subset(&fold.test);
    EvalReport::from_scores(test.labels(), model.score_batch(test.features())?)
}

/// Accuracy grid: one row per classifier, one column per feature set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub columns: Vec<String>,
    pub rows: Vec<ClassifierKind>,
    /// `accuracy[row][column]`, as fractions.
    pub accuracy: Vec<Vec<f64>>,
    /// Pooled confusion matrix of every cell, same indexing.
    pub confusion: Vec<Vec<ConfusionMatrix>>,
}

impl ResultsTable {
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.columns.len())
            .map(|c| self.accuracy.iter().map(|r| r[c]).sum::<f64>() / self.rows.len() as f64)
            .collect()
    }

    pub fn get(&self, row: ClassifierKind, column: &str) -> Option<f64> {
        let r = self.rows.iter().position(|&k| k == row)?;
        let c = self.columns.iter().position(|n| n == column)?;
        Some(self.accuracy[r][c])
    }

    /// CSV in percent with two decimals; the last row holds column averages.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "family,classifier,{}", self.columns.join(","))?;
        for (kind, row) in self.rows.iter().zip(&self.accuracy) {
            let cells: Vec<String> = row.iter().map(|a| format!("{:.2}", a * 100.0)).collect();
            writeln!(
                out,
                "{},{},{}",
                format!("{:?}", kind.family()).to_lowercase(),
                kind.label(),
                cells.join(",")
            )?;
        }
        let avg: Vec<String> = self.column_means().iter().map(|a| format!("{:.2}", a * 100.0)).collect();
        writeln!(out, ",Average,{}", avg.join(","))?;
        Ok(())
    }
}

impl ResultsTable {
    /// Long-format CSV: one line per cell with its pooled counts.
    pub fn write_confusion_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "classifier,features,tn,fp,fn,tp")?;
        for (kind, row) in self.rows.iter().zip(&self.confusion) {
            for (col, cm) in self.columns.iter().zip(row) {
                writeln!(out, "{},{col},{},{},{},{}", kind.name(), cm.tn, cm.fp, cm.fn_, cm.tp)?;
            }
        }
        Ok(())
    }
}

/// Cross-validates every classifier on every named feature set. Folds come
/// from `fold_seed`, model randomness from `model_seed`. Cells run on the
/// rayon pool; the table is assembled in input order.
pub fn run_grid(
    feature_sets: &[(String, Dataset)],
    kinds: &[ClassifierKind],
    k: usize,
    fold_seed: u64,
    model_seed: u64,
) -> Result<ResultsTable> {
    let cells: Vec<(usize, usize)> = (0..kinds.len())
        .flat_map(|r| (0..feature_sets.len()).map(move |c| (r, c)))
        .collect();
    let reports: Vec<Result<ConfusionMatrix>> = cells
        .par_iter()
        .map(|&(r, c)| {
            let spec = ClassifierSpec::new(kinds[r]).with_seed(model_seed);
            cross_validate(&feature_sets[c].1, &spec, k, fold_seed).map(|rep| rep.confusion)
        })
        .collect();
    let mut accuracy = vec![vec![0.0; feature_sets.len()]; kinds.len()];
    let mut confusion = vec![vec![ConfusionMatrix::default(); feature_sets.len()]; kinds.len()];
    for (&(r, c), cm) in cells.iter().zip(reports) {
        let cm = cm?;
        accuracy[r][c] = cm.accuracy()?;
        confusion[r][c] = cm;
    }
    Ok(ResultsTable {
        columns: feature_sets.iter().map(|(n, _)| n.clone()).collect(),
        rows: kinds.to_vec(),
        accuracy,
        confusion,
    })
}
