//! Synthetic leather-like patches with tick-bite-like blemishes, and
//! manifest-based ingestion of image folders.
//!
//! Background: two octaves of value noise scaled to the target mean and
//! standard deviation, then a Gaussian blur. Defects: one to three soft dark
//! ellipses whose bounding-box extents follow the reference defect
//! statistics. Every patch is a pure function of `(seed, index)`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::mix_seed;
use crate::image::{load_image, save_pgm, GrayImage};

/// Physical pixel pitch in millimetres.
pub const PIXEL_MM: f64 = 0.0375;
/// Reference defect fraction: 475 of 2378 patches.
pub const DEFAULT_DEFECT_FRACTION: f64 = 0.1997;
pub const DEFAULT_PATCH_SIZE: usize = 400;

/// Pixel area to square millimetres.
pub fn area_mm2(area_px: f64) -> f64 {
    area_px * PIXEL_MM * PIXEL_MM
}

/// Five-number summary plus mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn validate(&self, name: &str) -> Result<()> {
        let q = [self.min, self.q1, self.median, self.q3, self.max];
        if q.iter().any(|v| !v.is_finite()) || q.windows(2).any(|w| w[0] > w[1]) || self.min < 0.0 {
            return Err(Error::InvalidParams(format!(
                "{name}: quantiles must be finite, non-negative and ordered"
            )));
        }
        Ok(())
    }

    /// Inverse CDF of the piecewise-uniform distribution through the five
    /// quantiles (each quarter of probability spread evenly over its span).
    pub fn quantile(&self, u: f64) -> f64 {
        let q = [self.min, self.q1, self.median, self.q3, self.max];
        let u = u.clamp(0.0, 1.0);
        let seg = ((u * 4.0).floor() as usize).min(3);
        let t = u * 4.0 - seg as f64;
        q[seg] + t * (q[seg + 1] - q[seg])
    }

    fn field(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "min" => &mut self.min,
            "q1" => &mut self.q1,
            "median" => &mut self.median,
            "q3" => &mut self.q3,
            "max" => &mut self.max,
            "mean" => &mut self.mean,
            "std" => &mut self.std,
            _ => return None,
        })
    }
}

/// Defect bounding-box statistics in pixels at the 400-pixel patch scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectStats {
    pub x: Summary,
    pub y: Summary,
    pub area: Summary,
}

impl Default for DefectStats {
    fn default() -> Self {
        Self {
            x: Summary {
                min: 6.0,
                q1: 16.0,
                median: 20.0,
                q3: 26.0,
                max: 65.0,
                mean: 21.56,
                std: 8.22,
            },
            y: Summary {
                min: 5.0,
                q1: 16.0,
                median: 20.0,
                q3: 25.0,
                max: 71.0,
                mean: 20.86,
                std: 7.58,
            },
            area: Summary {
                min: 30.0,
                q1: 272.0,
                median: 396.0,
                q3: 575.0,
                max: 3195.0,
                mean: 480.44,
                std: 347.29,
            },
        }
    }
}

impl DefectStats {
    pub fn validate(&self) -> Result<()> {
        self.x.validate("x")?;
        self.y.validate("y")?;
        self.area.validate("area")?;
        if self.x.min * self.y.min > self.area.max {
            return Err(Error::InvalidParams("smallest box exceeds the area maximum".into()));
        }
        Ok(())
    }

    /// Parses `key=value` lines such as `x.q1=16` or `area.max=3195` over
    /// the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut stats = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Config(format!("stats line {}: '{raw}'", n + 1));
            let (key, value) = line.split_once('=').ok_or_else(bad)?;
            let (group, field) = key.trim().split_once('.').ok_or_else(bad)?;
            let summary = match group {
                "x" => &mut stats.x,
                "y" => &mut stats.y,
                "area" => &mut stats.area,
                _ => return Err(bad()),
            };
            *summary.field(field).ok_or_else(bad)? = value.trim().parse().map_err(|_| bad())?;
        }
        stats.validate()?;
        Ok(stats)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => e.into(),
        })?;
        Self::parse(&text)
    }
}

/// Generator settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub size: usize,
    pub background_mean: f64,
    /// Standard deviation of the value noise before blurring.
    pub background_std: f64,
    /// Lattice spacings (pixels) of the two noise octaves.
    pub octaves: [f64; 2],
    /// Relative amplitude of the second octave.
    pub octave_gain: f64,
    /// Gaussian blur sigma in pixels.
    pub blur: f64,
    pub dip_min: f64,
    pub dip_max: f64,
    pub max_blobs: usize,
    /// Correlation weight of the shared size factor between x and y extents.
    pub size_correlation: f64,
    /// Fraction of the semi-axes over which a blob fades out.
    pub soft_edge: f64,
    pub stats: DefectStats,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            size: DEFAULT_PATCH_SIZE,
            background_mean: 140.0,
            background_std: 12.0,
            octaves: [2.5, 1.25],
            octave_gain: 0.5,
            blur: 1.5,
            dip_min: 30.0,
            dip_max: 60.0,
            max_blobs: 3,
            size_correlation: 0.7,
            soft_edge: 0.4,
            stats: DefectStats::default(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        self.stats.validate()?;
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.size == 0 {
            return bad("patch size must be positive".into());
        }
        if self.octaves.iter().any(|&o| !(o > 0.0)) || !(self.blur >= 0.0) {
            return bad("octave spacings must be positive and blur non-negative".into());
        }
        if !(self.dip_min <= self.dip_max) || self.max_blobs == 0 {
            return bad("dip range must be ordered and at least one blob allowed".into());
        }
        if !(0.0..=1.0).contains(&self.size_correlation) || !(0.0..1.0).contains(&self.soft_edge) {
            return bad("size correlation must lie in [0, 1] and soft edge in [0, 1)".into());
        }
        let need = self.stats.x.max.max(self.stats.y.max).ceil() as usize;
        if self.size < need {
            return Err(Error::DefectTooLargeForPatch {
                extent: need,
                size: self.size,
            });
        }
        Ok(())
    }
}

/// One blemish: bounding box `width x height` whose top-left corner is at
/// `(left, top)`, darkened by `dip` at its core.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub left: usize,
    pub top: usize,
    pub width: usize,
    pub height: usize,
    pub dip: f64,
}

impl Blob {
    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Draws a `(width, height)` pair. Both extents share a latent size factor;
/// draws whose box area falls outside the area range are redrawn.
pub fn sample_extent<R: Rng>(rng: &mut R, stats: &DefectStats, correlation: f64) -> (usize, usize) {
    let own = (1.0 - correlation * correlation).sqrt();
    loop {
        let shared: f64 = rng.sample(StandardNormal);
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let ux = std_normal_cdf(correlation * shared + own * ex);
        let uy = std_normal_cdf(correlation * shared + own * ey);
        let w = (stats.x.quantile(ux).round() as usize).max(1);
        let h = (stats.y.quantile(uy).round() as usize).max(1);
        let a = (w * h) as f64;
        if a >= stats.area.min && a <= stats.area.max {
            return (w, h);
        }
    }
}

fn value_noise<R: Rng>(rng: &mut R, size: usize, spacing: f64) -> Vec<f64> {
    let cells = (size as f64 / spacing).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..cells * cells).map(|_| rng.random_range(-1.0..1.0)).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = vec![0.0; size * size];
    for r in 0..size {
        let fy = r as f64 / spacing;
        let (y0, ty) = (fy.floor() as usize, smooth(fy.fract()));
        for c in 0..size {
            let fx = c as f64 / spacing;
            let (x0, tx) = (fx.floor() as usize, smooth(fx.fract()));
            let v = |y: usize, x: usize| lattice[y * cells + x];
            let top = v(y0, x0) * (1.0 - tx) + v(y0, x0 + 1) * tx;
            let bottom = v(y0 + 1, x0) * (1.0 - tx) + v(y0 + 1, x0 + 1) * tx;
            out[r * size + c] = top * (1.0 - ty) + bottom * ty;
        }
    }
    out
}

/// Separable Gaussian blur with replicated borders.
fn blur(data: &[f64], size: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    let last = size as isize - 1;
    let mut tmp = vec![0.0; size * size];
    for r in 0..size {
        for c in 0..size {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let cc = (c as isize + k as isize - radius).clamp(0, last) as usize;
                acc += t * data[r * size + cc];
            }
            tmp[r * size + c] = acc;
        }
    }
    let mut out = vec![0.0; size * size];
    for r in 0..size {
        for c in 0..size {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let rr = (r as isize + k as isize - radius).clamp(0, last) as usize;
                acc += t * tmp[rr * size + c];
            }
            out[r * size + c] = acc;
        }
    }
    out
}

/// Background texture before quantization.
fn background<R: Rng>(rng: &mut R, p: &SynthParams) -> Vec<f64> {
    let n = p.size;
    let a = value_noise(rng, n, p.octaves[0]);
    let b = value_noise(rng, n, p.octaves[1]);
    let mut field: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + p.octave_gain * y).collect();
    let len = field.len() as f64;
    let mean = field.iter().sum::<f64>() / len;
    let std = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len).sqrt();
    let scale = if std > 0.0 { p.background_std / std } else { 0.0 };
    field.iter_mut().for_each(|v| *v = p.background_mean + (*v - mean) * scale);
    blur(&field, n, p.blur)
}

fn paint_blob(field: &mut [f64], size: usize, blob: &Blob, soft_edge: f64) {
    let (a, b) = (blob.width as f64 / 2.0, blob.height as f64 / 2.0);
    let (cx, cy) = (blob.left as f64 + a, blob.top as f64 + b);
    let core = 1.0 - soft_edge;
    for r in blob.top..blob.top + blob.height {
        for c in blob.left..blob.left + blob.width {
            let dx = (c as f64 + 0.5 - cx) / a;
            let dy = (r as f64 + 0.5 - cy) / b;
            let rho = (dx * dx + dy * dy).sqrt();
            let weight = if rho <= core {
                1.0
            } else if rho < 1.0 {
                0.5 * (1.0 + (std::f64::consts::PI * (rho - core) / soft_edge).cos())
            } else {
                0.0
            };
            field[r * size + c] -= blob.dip * weight;
        }
    }
}

/// A generated patch and the blemishes painted on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub image: GrayImage,
    pub label: u8,
    pub blobs: Vec<Blob>,
}

/// Generates one patch.
pub fn gen_patch<R: Rng>(rng: &mut R, defect: bool, params: &SynthParams) -> Result<Patch> {
    params.validate()?;
    let n = params.size;
    let mut field = background(rng, params);
    let mut blobs = Vec::new();
    if defect {
        let count = rng.random_range(1..=params.max_blobs);
        for _ in 0..count {
            let (width, height) = sample_extent(rng, &params.stats, params.size_correlation);
            let blob = Blob {
                left: rng.random_range(0..=n - width),
                top: rng.random_range(0..=n - height),
                width,
                height,
                dip: rng.random_range(params.dip_min..=params.dip_max),
            };
            paint_blob(&mut field, n, &blob, params.soft_edge);
            blobs.push(blob);
        }
    }
    let pixels = field.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    Ok(Patch {
        image: GrayImage::new(n, n, pixels)?,
        label: u8::from(defect),
        blobs,
    })
}

/// Number of defect patches in a set of `n`.
pub fn defect_count(n: usize, defect_fraction: f64) -> usize {
    (n as f64 * defect_fraction).round() as usize
}

/// Labels of a generated set: exactly `defect_count` ones at seeded positions.
pub fn dataset_labels(n: usize, defect_fraction: f64, seed: u64) -> Result<Vec<u8>> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 patches, got {n}")));
    }
    if !(defect_fraction > 0.0 && defect_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "defect fraction must lie in (0, 1), got {defect_fraction}"
        )));
    }
    let mut labels = vec![0u8; n];
    labels[..defect_count(n, defect_fraction)].fill(1);
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::MAX)));
    Ok(labels)
}

/// Patch `index` of the set generated from `seed`.
pub fn gen_indexed(seed: u64, index: usize, defect: bool, params: &SynthParams) -> Result<Patch> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, index as u64));
    gen_patch(&mut rng, defect, params)
}

/// Generates a whole set in memory, in parallel.
pub fn gen_patches(n: usize, defect_fraction: f64, seed: u64, params: &SynthParams) -> Result<Vec<Patch>> {
    params.validate()?;
    let labels = dataset_labels(n, defect_fraction, seed)?;
    labels
        .par_iter()
        .enumerate()
        .map(|(i, &l)| gen_indexed(seed, i, l == 1, params))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: u8,
}

/// Ordered `(path, label)` list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn patch_file_name(index: usize) -> String {
    format!("patch_{index:05}.pgm")
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// CSV with header `path,label`; paths written as stored.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["path", "label"])?;
        for e in &self.entries {
            w.write_record([e.path.to_string_lossy().as_ref(), &e.label.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a manifest. Relative paths are resolved against `base`.
    pub fn parse_csv<R: std::io::Read>(input: R, base: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (Some(pc), Some(lc)) = (col("path"), col("label")) else {
            return Err(Error::CorruptData("manifest header must contain path,label".into()));
        };
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let raw = rec.get(lc).unwrap_or("");
            let label = match raw {
                "0" => 0,
                "1" => 1,
                _ => {
                    return Err(Error::BadLabel {
                        line,
                        label: raw.to_string(),
                    })
                }
            };
            let p = PathBuf::from(rec.get(pc).unwrap_or(""));
            let path = if p.is_absolute() { p } else { base.join(p) };
            if !seen.insert(path.clone()) {
                return Err(Error::CorruptData(format!(
                    "duplicate manifest path {} on line {line}",
                    path.display()
                )));
            }
            entries.push(ManifestEntry { path, label });
        }
        Ok(Self { entries })
    }
}

/// Reads a manifest file; relative paths resolve against its directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => e.into(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    Manifest::parse_csv(std::io::BufReader::new(file), base)
}

/// Reads a manifest and every image it lists, in manifest order.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<(Vec<GrayImage>, Vec<u8>, Vec<String>)> {
    let manifest = read_manifest(path)?;
    for e in &manifest.entries {
        if !e.path.is_file() {
            return Err(Error::MissingFile(e.path.clone()));
        }
    }
    let images = manifest
        .entries
        .par_iter()
        .map(|e| load_image(&e.path))
        .collect::<Result<Vec<_>>>()?;
    let ids = manifest
        .entries
        .iter()
        .map(|e| e.path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()))
        .collect();
    Ok((images, manifest.labels(), ids))
}

/// Writes `n` PGM patches plus `manifest.csv` into `out_dir`.
pub fn gen_dataset(
    n: usize,
    defect_fraction: f64,
    seed: u64,
    params: &SynthParams,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    params.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let labels = dataset_labels(n, defect_fraction, seed)?;
    labels
        .par_iter()
        .enumerate()
        .try_for_each(|(i, &l)| -> Result<()> {
            let patch = gen_indexed(seed, i, l == 1, params)?;
            save_pgm(&patch.image, out_dir.join(patch_file_name(i)))
        })?;
    let manifest = Manifest {
        entries: labels
            .iter()
            .enumerate()
            .map(|(i, &label)| ManifestEntry {
                path: PathBuf::from(patch_file_name(i)),
                label,
            })
            .collect(),
    };
    let mut buf = Vec::new();
    manifest.write_csv(&mut buf)?;
    crate::io::write_atomic(out_dir.join("manifest.csv"), &buf)?;
    Ok(manifest)
}
