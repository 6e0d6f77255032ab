use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline, from image decoding to model training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image data: {0}")]
    CorruptData(String),
    #[error("image dimensions must be at least 1x1")]
    ZeroDimension,
    #[error("kernel {kernel_rows}x{kernel_cols} does not fit image {rows}x{cols}")]
    KernelTooLarge {
        kernel_rows: usize,
        kernel_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cell size {cell} does not tile a {width}x{height} image")]
    IndivisibleCellSize {
        cell: usize,
        width: usize,
        height: usize,
    },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset contains a single class")]
    SingleClassDataset,
    #[error("SMO did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("feature vector has length {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("network weights contain non-finite values")]
    NonFiniteWeights,
    #[error("empty batch")]
    EmptyBatch,
    #[error("gradient contains non-finite values")]
    NonFiniteGradient,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("class {class} has {count} samples, fewer than k = {k}")]
    TooFewPerClass { class: u8, count: usize, k: usize },
    #[error("ROC needs both classes among the labels")]
    SingleClassLabels,
    #[error("defect extent {extent} px does not fit a {size} px patch")]
    DefectTooLargeForPatch { extent: usize, size: usize },
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("bad label {label:?} on manifest line {line}")]
    BadLabel { line: usize, label: String },
    #[error("config: {0}")]
    Config(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
