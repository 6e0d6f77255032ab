//! Descriptor tags, feature vectors and the on-disk feature matrix formats.
//!
//! Two matrix formats are supported:
//!
//! * CSV with header `id,label,f0,…,f{N-1}`, one row per image.
//! * Little-endian binary: a 16-byte header (`b"DVFM"`, `n_rows: u32`,
//!   `n_cols: u32`, descriptor code `u32`), then `n_rows * n_cols` `f64`
//!   values row-major, then one label byte per row.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::edge::{edge_features, EdgeMethod, EdgeParams};
use crate::error::{Error, Result};
use crate::image::{resize_bilinear, GrayImage};
use crate::stats::{hog, hpiv, lbp, LBP_BINS};

/// Side length every patch is resampled to before encoding.
pub const PATCH_SIDE: usize = 40;

const MATRIX_MAGIC: &[u8; 4] = b"DVFM";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Descriptor {
    Hpiv,
    Hog { cell: usize },
    Lbp { cell: usize },
    Edge(EdgeMethod),
}

impl Descriptor {
    /// Column order of the statistical results table.
    pub const STATISTICAL: [Descriptor; 6] = [
        Descriptor::Hpiv,
        Descriptor::Hog { cell: 8 },
        Descriptor::Hog { cell: 10 },
        Descriptor::Lbp { cell: 8 },
        Descriptor::Lbp { cell: 16 },
        Descriptor::Lbp { cell: 32 },
    ];

    pub const EDGE: [Descriptor; 6] = [
        Descriptor::Edge(EdgeMethod::Canny),
        Descriptor::Edge(EdgeMethod::Prewitt),
        Descriptor::Edge(EdgeMethod::Sobel),
        Descriptor::Edge(EdgeMethod::Roberts),
        Descriptor::Edge(EdgeMethod::Log),
        Descriptor::Edge(EdgeMethod::ApproxCanny),
    ];

    /// Parses a descriptor family name plus an optional cell size
    /// (`hog` defaults to 8, `lbp` to 8).
    pub fn from_name(name: &str, cell: Option<usize>) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        let d = match lower.as_str() {
            "hpiv" => Descriptor::Hpiv,
            "hog" => Descriptor::Hog {
                cell: cell.unwrap_or(8),
            },
            "lbp" => Descriptor::Lbp {
                cell: cell.unwrap_or(8),
            },
            other => match other.strip_prefix("edge-").unwrap_or(other).parse() {
                Ok(m) => Descriptor::Edge(m),
                Err(_) => return lower.parse(),
            },
        };
        Ok(d)
    }

    /// Feature count for a `width x height` input.
    pub fn output_len(self, width: usize, height: usize) -> usize {
        match self {
            Descriptor::Hpiv => 256,
            Descriptor::Hog { cell } => {
                let (nx, ny) = (width / cell, height / cell);
                nx.saturating_sub(1) * ny.saturating_sub(1) * 4 * 9
            }
            Descriptor::Lbp { cell } => (width / cell) * (height / cell) * LBP_BINS,
            Descriptor::Edge(_) => width * height,
        }
    }

    fn code(self) -> u32 {
        match self {
            Descriptor::Hpiv => 0x0100_0000,
            Descriptor::Hog { cell } => 0x0200_0000 | cell as u32,
            Descriptor::Lbp { cell } => 0x0300_0000 | cell as u32,
            Descriptor::Edge(m) => {
                0x0400_0000 | EdgeMethod::ALL.iter().position(|&x| x == m).unwrap() as u32
            }
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        let param = (code & 0x00ff_ffff) as usize;
        match code >> 24 {
            1 => Ok(Descriptor::Hpiv),
            2 => Ok(Descriptor::Hog { cell: param }),
            3 => Ok(Descriptor::Lbp { cell: param }),
            4 if param < EdgeMethod::ALL.len() => Ok(Descriptor::Edge(EdgeMethod::ALL[param])),
            _ => Err(Error::ModelFormat(format!("unknown descriptor code {code:#x}"))),
        }
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Descriptor::Hpiv => write!(f, "hpiv"),
            Descriptor::Hog { cell } => write!(f, "hog{cell}"),
            Descriptor::Lbp { cell } => write!(f, "lbp{cell}"),
            Descriptor::Edge(m) => write!(f, "edge-{m}"),
        }
    }
}

impl FromStr for Descriptor {
    type Err = Error;

    /// Parses the tag form produced by `Display` (`hog10`, `edge-sobel`, …).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        if s == "hpiv" {
            return Ok(Descriptor::Hpiv);
        }
        if let Some(m) = s.strip_prefix("edge-") {
            return Ok(Descriptor::Edge(m.parse()?));
        }
        let cell = |rest: &str| {
            rest.parse::<usize>()
                .map_err(|_| Error::InvalidParams(format!("unknown descriptor {s:?}")))
        };
        if let Some(rest) = s.strip_prefix("hog") {
            return Ok(Descriptor::Hog { cell: cell(rest)? });
        }
        if let Some(rest) = s.strip_prefix("lbp") {
            return Ok(Descriptor::Lbp { cell: cell(rest)? });
        }
        Err(Error::InvalidParams(format!("unknown descriptor {s:?}")))
    }
}

/// Fixed-length feature vector tagged with the descriptor that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    descriptor: Descriptor,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(descriptor: Descriptor, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { descriptor, values }
    }

    pub fn descriptor(&self) -> Descriptor {
        self.descriptor
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Encodes an image that is already at the working resolution.
pub fn describe(img: &GrayImage, descriptor: Descriptor, params: &EdgeParams) -> Result<FeatureVector> {
    match descriptor {
        Descriptor::Hpiv => Ok(hpiv(img)),
        Descriptor::Hog { cell } => hog(img, cell),
        Descriptor::Lbp { cell } => lbp(img, cell),
        Descriptor::Edge(m) => edge_features(img, m, params),
    }
}

/// Resamples to `PATCH_SIDE x PATCH_SIDE` (when needed) and encodes.
pub fn extract(img: &GrayImage, descriptor: Descriptor, params: &EdgeParams) -> Result<FeatureVector> {
    if img.width() == PATCH_SIDE && img.height() == PATCH_SIDE {
        describe(img, descriptor, params)
    } else {
        describe(&resize_bilinear(img, PATCH_SIDE, PATCH_SIDE)?, descriptor, params)
    }
}

/// Encodes a labelled image set into a dataset, in parallel.
pub fn build_dataset(
    images: &[GrayImage],
    labels: &[u8],
    ids: &[String],
    descriptor: Descriptor,
    params: &EdgeParams,
) -> Result<Dataset> {
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<FeatureVector> = images
        .par_iter()
        .map(|img| extract(img, descriptor, params))
        .collect::<Result<_>>()?;
    let p = rows[0].len();
    let mut flat = Vec::with_capacity(rows.len() * p);
    for r in &rows {
        if r.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: r.len(),
            });
        }
        flat.extend_from_slice(r.values());
    }
    let features = Array2::from_shape_vec((rows.len(), p), flat).expect("shape checked");
    Dataset::new(features, labels.to_vec(), ids.to_vec())
}

pub fn write_features_csv<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..data.n_features()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for i in 0..data.n_samples() {
        let mut rec = vec![data.ids()[i].clone(), data.labels()[i].to_string()];
        rec.extend(data.features().row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let n_cols = rdr.headers()?.len().saturating_sub(2);
    let (mut ids, mut labels, mut flat) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let label = &rec[1];
        labels.push(match label {
            "0" => 0,
            "1" => 1,
            _ => {
                return Err(Error::BadLabel {
                    line: line + 2,
                    label: label.to_string(),
                })
            }
        });
        ids.push(rec[0].to_string());
        for v in rec.iter().skip(2) {
            flat.push(
                v.parse::<f64>()
                    .map_err(|e| Error::InvalidParams(format!("line {}: {e}", line + 2)))?,
            );
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = Array2::from_shape_vec((labels.len(), n_cols), flat)
        .map_err(|e| Error::InvalidParams(format!("ragged feature rows: {e}")))?;
    Dataset::new(features, labels, ids)
}

pub fn write_features_bin<W: Write>(mut out: W, data: &Dataset, descriptor: Descriptor) -> Result<()> {
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&(data.n_samples() as u32).to_le_bytes())?;
    out.write_all(&(data.n_features() as u32).to_le_bytes())?;
    out.write_all(&descriptor.code().to_le_bytes())?;
    for v in data.features().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(data.labels())?;
    Ok(())
}

/// Reads a binary matrix; row ids are synthesized as the row index.
pub fn read_features_bin<R: Read>(mut input: R) -> Result<(Descriptor, Dataset)> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[0..4] != MATRIX_MAGIC {
        return Err(Error::ModelFormat("bad feature matrix magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (n, p) = (word(4) as usize, word(8) as usize);
    let descriptor = Descriptor::from_code(word(12))?;
    let mut buf = vec![0u8; n * p * 8];
    input.read_exact(&mut buf)?;
    let flat = buf
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let mut labels = vec![0u8; n];
    input.read_exact(&mut labels)?;
    let features = Array2::from_shape_vec((n, p), flat).expect("shape from header");
    let ids = (0..n).map(|i| i.to_string()).collect();
    Ok((descriptor, Dataset::new(features, labels, ids)?))
}
