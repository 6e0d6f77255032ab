//! Three-layer feed-forward network trained with Adam.
//!
//! `h = act₁(W₁x + b₁)`, `y = act₂(W₂h + b₂)`. The default pairing is a ReLU
//! hidden layer with one sigmoid output; a tanh hidden layer with a two-way
//! softmax output is also available. Loss is mean cross-entropy.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::eval::{mix_seed, stratified_holdout, EvalReport, Split};

pub const HIDDEN_SIZES: [usize; 4] = [30, 40, 50, 60];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HiddenActivation {
    Relu,
    /// Hyperbolic tangent ("tan-sigmoid").
    Tansig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputActivation {
    /// One output unit.
    Sigmoid,
    /// Two output units, one per class.
    Softmax,
}

impl OutputActivation {
    pub fn units(self) -> usize {
        match self {
            OutputActivation::Sigmoid => 1,
            OutputActivation::Softmax => 2,
        }
    }
}

impl FromStr for HiddenActivation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Self::Relu),
            "tansig" | "tanh" => Ok(Self::Tansig),
            _ => Err(Error::InvalidParams(format!("unknown hidden activation '{s}'"))),
        }
    }
}

impl FromStr for OutputActivation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Self::Sigmoid),
            "softmax" => Ok(Self::Softmax),
            _ => Err(Error::InvalidParams(format!("unknown output activation '{s}'"))),
        }
    }
}

impl fmt::Display for HiddenActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Relu => "relu",
            Self::Tansig => "tansig",
        })
    }
}

impl fmt::Display for OutputActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sigmoid => "sigmoid",
            Self::Softmax => "softmax",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Mini-batch size; `None` trains full-batch up to 4096 samples and in
    /// batches of 128 beyond.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Keep the hidden layer at its initial values (last-layer-only training).
    pub freeze_hidden: bool,
}

pub const FULL_BATCH_LIMIT: usize = 4096;
pub const DEFAULT_BATCH: usize = 128;

impl AnnConfig {
    pub fn new(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            hidden_activation: HiddenActivation::Relu,
            output_activation: OutputActivation::Sigmoid,
            adam: AdamConfig::default(),
            epochs: 200,
            batch_size: None,
            seed: 0,
            freeze_hidden: false,
        }
    }

    pub fn outputs(&self) -> usize {
        self.output_activation.units()
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if self.input_dim == 0 || self.hidden == 0 {
            return bad("network dimensions must be at least 1");
        }
        if !(a.beta1 > 0.0 && a.beta1 < 1.0 && a.beta2 > 0.0 && a.beta2 < 1.0) {
            return bad("Adam betas must lie in (0, 1)");
        }
        if !(a.lr > 0.0 && a.lr.is_finite()) || !(a.epsilon >= 0.0) {
            return bad("Adam learning rate must be positive and epsilon non-negative");
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be at least 1");
        }
        Ok(())
    }

    fn batch_for(&self, n: usize) -> usize {
        match self.batch_size {
            Some(b) => b.min(n),
            None if n <= FULL_BATCH_LIMIT => n,
            None => DEFAULT_BATCH,
        }
    }
}

/// Weights and biases; also used for gradients and Adam moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// `g × x`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `o × g`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Params {
    pub fn zeros(x: usize, g: usize, o: usize) -> Self {
        Self {
            w1: Array2::zeros((g, x)),
            b1: Array1::zeros(g),
            w2: Array2::zeros((o, g)),
            b2: Array1::zeros(o),
        }
    }

    fn slices(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.slices().into_iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mutable access to the `k`-th scalar in flattened order (W₁, b₁, W₂, b₂).
    pub fn get_mut(&mut self, mut k: usize) -> &mut f64 {
        for s in self.slices_mut() {
            if k < s.len() {
                return &mut s[k];
            }
            k -= s.len();
        }
        panic!("parameter index out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub params: Params,
    pub config: AnnConfig,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl HiddenActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Self::Relu => z.max(0.0),
            Self::Tansig => z.tanh(),
        }
    }

    /// Derivative from the pre-activation `z` and the activation `h`.
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tansig => 1.0 - h * h,
        }
    }
}

struct Pass {
    z1: Array2<f64>,
    h: Array2<f64>,
    z2: Array2<f64>,
}

impl AnnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: AnnConfig) -> Result<Self> {
        config.validate()?;
        let (x, g, o) = (config.input_dim, config.hidden, config.outputs());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = Params::zeros(x, g, o);
        let l1 = (6.0 / (x + g) as f64).sqrt();
        params.w1.mapv_inplace(|_| rng.random_range(-l1..=l1));
        let l2 = (6.0 / (g + o) as f64).sqrt();
        params.w2.mapv_inplace(|_| rng.random_range(-l2..=l2));
        Ok(Self { params, config })
    }

    pub fn from_params(params: Params, config: AnnConfig) -> Result<Self> {
        config.validate()?;
        let (x, g, o) = (config.input_dim, config.hidden, config.outputs());
        if params.w1.dim() != (g, x) || params.b1.len() != g || params.w2.dim() != (o, g) || params.b2.len() != o
        {
            return Err(Error::InvalidParams("parameter shapes do not match the configuration".into()));
        }
        Ok(Self { params, config })
    }

    fn pass(&self, x: ArrayView2<'_, f64>) -> Pass {
        let p = &self.params;
        let z1 = x.dot(&p.w1.t()) + &p.b1;
        let act = self.config.hidden_activation;
        let h = z1.mapv(|z| act.apply(z));
        let z2 = h.dot(&p.w2.t()) + &p.b2;
        Pass { z1, h, z2 }
    }

    fn outputs_from(&self, z2: &Array2<f64>) -> Array2<f64> {
        match self.config.output_activation {
            OutputActivation::Sigmoid => z2.mapv(sigmoid),
            OutputActivation::Softmax => {
                let mut y = z2.clone();
                for mut row in y.rows_mut() {
                    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - m).exp());
                    let s = row.sum();
                    row /= s;
                }
                y
            }
        }
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                got: cols,
            });
        }
        if !self.params.is_finite() {
            return Err(Error::NonFiniteWeights);
        }
        Ok(())
    }

    /// Output activations for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("one row");
        Ok(self.forward_batch(row.view())?.row(0).to_vec())
    }

    /// Output activations, one row per input row.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        Ok(self.outputs_from(&self.pass(x).z2))
    }

    /// Probability of class 1 for each row.
    pub fn defect_probability(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let y = self.forward_batch(x)?;
        let col = y.ncols() - 1;
        Ok(y.column(col).to_vec())
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, x: ArrayView2<'_, f64>, labels: &[u8]) -> Result<(f64, Params)> {
        if x.nrows() == 0 || labels.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: labels.len(),
            });
        }
        self.check_input(x.ncols())?;
        let n = x.nrows() as f64;
        let pass = self.pass(x);
        let mut dz2 = Array2::zeros(pass.z2.dim());
        let mut loss = 0.0;
        match self.config.output_activation {
            OutputActivation::Sigmoid => {
                for (i, &l) in labels.iter().enumerate() {
                    let z = pass.z2[[i, 0]];
                    let y = f64::from(l);
                    loss += softplus(z) - y * z;
                    dz2[[i, 0]] = (sigmoid(z) - y) / n;
                }
            }
            OutputActivation::Softmax => {
                for (i, &l) in labels.iter().enumerate() {
                    let row = pass.z2.row(i);
                    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                    loss += lse - row[l as usize];
                    for c in 0..row.len() {
                        let p = (row[c] - lse).exp();
                        dz2[[i, c]] = (p - f64::from(u8::from(c == l as usize))) / n;
                    }
                }
            }
        }
        // Products with a transposed operand can come back column-major;
        // Params needs row-major storage.
        let w2 = dz2.t().dot(&pass.h).as_standard_layout().into_owned();
        let b2 = dz2.sum_axis(Axis(0));
        let dh = dz2.dot(&self.params.w2);
        let act = self.config.hidden_activation;
        let mut dz1 = dh;
        ndarray::Zip::from(&mut dz1)
            .and(&pass.z1)
            .and(&pass.h)
            .for_each(|d, &z, &h| *d *= act.derivative(z, h));
        let w1 = dz1.t().dot(&x).as_standard_layout().into_owned();
        let b1 = dz1.sum_axis(Axis(0));
        Ok((loss / n, Params { w1, b1, w2, b2 }))
    }

    pub fn loss(&self, x: ArrayView2<'_, f64>, labels: &[u8]) -> Result<f64> {
        self.loss_and_grad(x, labels).map(|(l, _)| l)
    }
}

/// First and second moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(like: &Params, config: AdamConfig) -> Self {
        let zero = Params::zeros(like.w1.ncols(), like.w1.nrows(), like.w2.nrows());
        Self {
            m: zero.clone(),
            v: zero,
            t: 0,
            config,
        }
    }

    /// One bias-corrected Adam update of `params`. With `frozen_hidden` the
    /// hidden layer is left untouched.
    pub fn step(&mut self, params: &mut Params, grads: &Params, frozen_hidden: bool) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        self.t += 1;
        let c = self.config;
        let t = self.t as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let first = if frozen_hidden { 2 } else { 0 };
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        let ps = params.slices_mut();
        let gs = grads.slices();
        for (k, (((m, v), p), g)) in ms.into_iter().zip(vs).zip(ps).zip(gs).enumerate() {
            if k < first {
                continue;
            }
            for i in 0..g.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= c.lr * mh / (vh.sqrt() + c.epsilon);
            }
        }
        Ok(())
    }
}

/// Network plus the input standardization fitted on its training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedAnn {
    pub model: AnnModel,
    pub standardizer: Standardizer,
}

impl TrainedAnn {
    /// Probability of class 1 for raw feature rows.
    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.standardizer.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.standardizer.n_features(),
                got: x.ncols(),
            });
        }
        self.model.defect_probability(self.standardizer.transform(x).view())
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        Ok(self.scores(x)?.into_iter().map(|p| u8::from(p > 0.5)).collect())
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<EvalReport> {
        let scores = self.scores(data.features())?;
        let predicted: Vec<u8> = scores.iter().map(|&p| u8::from(p > 0.5)).collect();
        EvalReport::from_parts(data.labels(), &predicted, scores)
    }
}

/// Trains on every row of `data` (inputs are z-scored first). Returns the
/// network and the full-training-set loss after each epoch.
pub fn fit_ann(data: &Dataset, config: AnnConfig) -> Result<(TrainedAnn, Vec<f64>)> {
    data.require_both_classes()?;
    let config = AnnConfig {
        input_dim: data.n_features(),
        ..config
    };
    let mut model = AnnModel::init(config)?;
    let standardizer = Standardizer::fit(data.features());
    let z = standardizer.transform(data.features());
    let labels = data.labels();
    let n = labels.len();
    let batch = config.batch_for(n);
    let mut adam = AdamState::new(&model.params, config.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        if batch >= n {
            let (_, g) = model.loss_and_grad(z.view(), labels)?;
            adam.step(&mut model.params, &g, config.freeze_hidden)?;
        } else {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let xb = z.select(Axis(0), chunk);
                let yb: Vec<u8> = chunk.iter().map(|&i| labels[i]).collect();
                let (_, g) = model.loss_and_grad(xb.view(), &yb)?;
                adam.step(&mut model.params, &g, config.freeze_hidden)?;
            }
        }
        history.push(model.loss(z.view(), labels)?);
    }
    Ok((TrainedAnn { model, standardizer }, history))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnRun {
    pub network: TrainedAnn,
    pub split: Split,
    pub train: EvalReport,
    pub test: EvalReport,
    pub loss_history: Vec<f64>,
}

/// Stratified holdout training run.
pub fn train_ann(data: &Dataset, config: AnnConfig, split: Split) -> Result<AnnRun> {
    data.require_both_classes()?;
    let fold = stratified_holdout(data.labels(), split, mix_seed(config.seed, 2))?;
    let train_set = data.subset(&fold.train);
    let test_set = data.subset(&fold.test);
    let (network, loss_history) = fit_ann(&train_set, config)?;
    let train = network.evaluate(&train_set)?;
    let test = network.evaluate(&test_set)?;
    Ok(AnnRun {
        network,
        split,
        train,
        test,
        loss_history,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub hidden: usize,
    pub split: Split,
    pub run: AnnRun,
}

/// Every (hidden size, split) combination, each an independent job.
pub fn ann_sweep(data: &Dataset, base: AnnConfig, hidden: &[usize], splits: &[Split]) -> Result<Vec<SweepCell>> {
    let jobs: Vec<(usize, Split)> = hidden
        .iter()
        .flat_map(|&g| splits.iter().map(move |&s| (g, s)))
        .collect();
    jobs.par_iter()
        .map(|&(g, s)| {
            let cfg = AnnConfig { hidden: g, ..base };
            train_ann(data, cfg, s).map(|run| SweepCell {
                hidden: g,
                split: s,
                run,
            })
        })
        .collect()
}

/// Accuracy grid in percent: rows are hidden sizes, columns splits.
pub fn write_sweep_csv<W: std::io::Write>(cells: &[SweepCell], mut out: W) -> Result<()> {
    let mut hidden: Vec<usize> = cells.iter().map(|c| c.hidden).collect();
    hidden.dedup();
    hidden.sort_unstable();
    hidden.dedup();
    let mut splits: Vec<Split> = cells.iter().map(|c| c.split).collect();
    splits.sort_by_key(|s| s.train_percent());
    splits.dedup();
    let header: Vec<String> = splits.iter().map(|s| s.to_string()).collect();
    writeln!(out, "hidden,{}", header.join(","))?;
    for g in hidden {
        let row: Vec<String> = splits
            .iter()
            .map(|s| {
                cells
                    .iter()
                    .find(|c| c.hidden == g && c.split == *s)
                    .map(|c| format!("{:.2}", c.run.test.accuracy * 100.0))
                    .unwrap_or_default()
            })
            .collect();
        writeln!(out, "{g},{}", row.join(","))?;
    }
    Ok(())
}
