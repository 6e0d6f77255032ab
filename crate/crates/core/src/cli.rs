//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Every output file
//! is written to a temp file and renamed into place.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ann::{ann_sweep, train_ann, write_sweep_csv, AnnConfig, HIDDEN_SIZES};
use crate::classify::{ClassifierKind, ClassifierSpec};
use crate::config::{stage_seed, Config};
use crate::dataset::Dataset;
use crate::descriptor::{
    build_dataset, read_features_bin, read_features_csv, write_features_bin, write_features_csv, Descriptor,
    PATCH_SIDE,
};
use crate::edge::{detect_edges, EdgeMethod, EdgeParams};
use crate::error::Error;
use crate::eval::{cross_validate, holdout, run_grid, EvalReport, Split};
use crate::image::{encode_pgm, load_image, resize_bilinear};
use crate::io::write_atomic;
use crate::synth::{gen_dataset, load_manifest, DefectStats, SynthParams, DEFAULT_DEFECT_FRACTION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "defect-vision", version, about = "Defect / no-defect classification of grayscale texture patches")]
pub struct Cli {
    /// Key=value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic patch set (PGM files + manifest.csv).
    Synth(SynthArgs),
    /// Apply one descriptor to every image of a manifest.
    Extract(ExtractArgs),
    /// Cross-validate one classifier, or a whole table with --grid.
    Cv(CvArgs),
    /// Train the neural network over hidden sizes x train/test splits.
    AnnSweep(AnnArgs),
    /// Cross-validated ROC curve of one classifier.
    Roc(RocArgs),
    /// Write the binary edge maps of images as PGM files.
    DumpEdges(DumpArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    defect_frac: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Patch side in pixels.
    #[arg(long)]
    size: Option<usize>,
    /// Defect-size statistics file overriding the built-in defaults.
    #[arg(long)]
    stats: Option<PathBuf>,
}

/// Where features come from: a feature matrix, or a manifest plus descriptor.
#[derive(Args, Debug, Default)]
struct Source {
    /// Feature matrix (.csv or .bin) written by `extract`.
    #[arg(long, conflicts_with_all = ["manifest", "desc"])]
    features: Option<PathBuf>,
    /// Image manifest (`path,label`).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Descriptor: canny, prewitt, sobel, roberts, log, approxcanny, hpiv, hog, lbp.
    #[arg(long)]
    desc: Option<String>,
    /// Cell size for hog / lbp.
    #[arg(long)]
    cell: Option<usize>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    desc: Option<String>,
    #[arg(long)]
    cell: Option<usize>,
    /// Output feature matrix; `.bin` selects the binary format, anything else CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write each edge map as PGM into this directory (edge descriptors only).
    #[arg(long)]
    dump_edges: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[command(flatten)]
    source: Source,
    /// Classifier name, e.g. fine-gaussian-svm.
    #[arg(long)]
    classifier: Option<String>,
    /// Full table over the edge or statistical descriptors (needs --manifest).
    #[arg(long, value_parser = ["edge", "stat"])]
    grid: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    /// Single train/test split instead of k-fold, as the training percentage.
    #[arg(long, conflicts_with = "grid")]
    holdout: Option<u8>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnnArgs {
    #[command(flatten)]
    source: Source,
    /// Hidden layer size; omit to sweep 30, 40, 50, 60.
    #[arg(long)]
    g: Option<usize>,
    /// Training percentage (70, 75, 80, 85, 90, 95); omit to sweep all six.
    #[arg(long)]
    split: Option<u8>,
    #[arg(long)]
    epochs: Option<usize>,
    /// relu or tansig.
    #[arg(long)]
    hidden_activation: Option<String>,
    /// sigmoid or softmax.
    #[arg(long)]
    output_activation: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RocArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DumpArgs {
    /// Single input image.
    #[arg(long, conflicts_with = "manifest")]
    image: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Edge method; omit for all six.
    #[arg(long)]
    method: Option<String>,
    /// Detect at the input resolution instead of 40x40.
    #[arg(long)]
    no_resize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    /// Malformed config values are the caller's mistake, so they count as usage errors.
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            e => CliError::Runtime(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            if let CliError::Usage(_) = e {
                eprintln!("run with --help for usage");
            }
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(&cfg, a),
        Command::Extract(a) => cmd_extract(&cfg, a),
        Command::Cv(a) => cmd_cv(&cfg, a),
        Command::AnnSweep(a) => cmd_ann_sweep(&cfg, a),
        Command::Roc(a) => cmd_roc(&cfg, a),
        Command::DumpEdges(a) => cmd_dump_edges(&cfg, a),
    }
}

fn require<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("missing required {what}")))
}

fn path_opt(cfg: &Config, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
    flag.or_else(|| cfg.raw(key).map(PathBuf::from))
}

fn seed(cfg: &Config, flag: Option<u64>) -> CliResult<u64> {
    Ok(cfg.pick(flag, "seed", 0)?)
}

fn edge_params(cfg: &Config) -> CliResult<EdgeParams> {
    let mut p = EdgeParams::default();
    p.threshold = cfg.get("edge.threshold")?.or(p.threshold);
    p.log_sigma = cfg.get("edge.log_sigma")?.unwrap_or(p.log_sigma);
    p.log_threshold = cfg.get("edge.log_threshold")?.or(p.log_threshold);
    p.canny_sigma = cfg.get("edge.canny_sigma")?.unwrap_or(p.canny_sigma);
    p.canny_high = cfg.get("edge.canny_high")?.or(p.canny_high);
    p.canny_low = cfg.get("edge.canny_low")?.or(p.canny_low);
    p.approx_min_strong = cfg.get("edge.approx_min_strong")?.unwrap_or(p.approx_min_strong);
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn descriptor(cfg: &Config, name: Option<String>, cell: Option<usize>) -> CliResult<Descriptor> {
    let name = require(name.or_else(|| cfg.raw("descriptor.name").map(String::from)), "--desc")?;
    let cell = match cell {
        Some(c) => Some(c),
        None => cfg.get("descriptor.cell")?,
    };
    Descriptor::from_name(&name, cell).map_err(|_| {
        usage(format!(
            "unknown descriptor '{name}'; valid: canny, prewitt, sobel, roberts, log, approxcanny, hpiv, hog, lbp"
        ))
    })
}

fn classifier(cfg: &Config, name: Option<String>) -> CliResult<ClassifierKind> {
    let name = require(name.or_else(|| cfg.raw("classifier.name").map(String::from)), "--classifier")?;
    name.parse().map_err(|_| {
        usage(format!(
            "unknown classifier '{name}'; valid classifiers: {}",
            ClassifierKind::valid_names()
        ))
    })
}

fn split(percent: u8) -> CliResult<Split> {
    Split::new(percent).map_err(|e| usage(e.to_string()))
}

fn check_dataset(data: &Dataset) -> CliResult<()> {
    if data.n_samples() == 0 {
        return Err(Error::EmptyDataset.into());
    }
    Ok(())
}

fn load_images(manifest: &Path) -> CliResult<(Vec<crate::image::GrayImage>, Vec<u8>, Vec<String>)> {
    let loaded = load_manifest(manifest)?;
    if loaded.0.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    Ok(loaded)
}

fn load_source(cfg: &Config, src: Source) -> CliResult<Dataset> {
    let data = if let Some(path) = path_opt(cfg, src.features, "dataset.features") {
        let file = std::fs::File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.clone()),
            _ => e.into(),
        })?;
        let reader = std::io::BufReader::new(file);
        if path.extension().is_some_and(|e| e == "bin") {
            read_features_bin(reader)?.1
        } else {
            read_features_csv(reader)?
        }
    } else {
        let manifest = require(path_opt(cfg, src.manifest, "dataset.manifest"), "--features or --manifest")?;
        let desc = descriptor(cfg, src.desc, src.cell)?;
        let params = edge_params(cfg)?;
        let (images, labels, ids) = load_images(&manifest)?;
        build_dataset(&images, &labels, &ids, desc, &params)?
    };
    check_dataset(&data)?;
    Ok(data)
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut Vec<u8>) -> crate::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_atomic(path, &buf)?;
    Ok(())
}

fn write_report(dir: &Path, report: &EvalReport) -> CliResult<()> {
    write_with(&dir.join("confusion.csv"), |b| report.confusion.write_csv(b))?;
    if let Some(roc) = &report.roc {
        write_with(&dir.join("roc.csv"), |b| roc.write_csv(b))?;
    }
    Ok(())
}

fn cmd_synth(cfg: &Config, a: SynthArgs) -> CliResult<()> {
    let out = require(path_opt(cfg, a.out, "synth.out"), "--out")?;
    let n = cfg.pick(a.n, "synth.n", 2378)?;
    let frac = cfg.pick(a.defect_frac, "synth.defect_frac", DEFAULT_DEFECT_FRACTION)?;
    let mut params = SynthParams::default();
    params.size = cfg.pick(a.size, "synth.size", params.size)?;
    if let Some(p) = path_opt(cfg, a.stats, "synth.stats") {
        params.stats = DefectStats::load(p)?;
    }
    if n < 2 || !(frac > 0.0 && frac < 1.0) {
        return Err(usage("--n must be at least 2 and --defect-frac lie in (0, 1)"));
    }
    let manifest = gen_dataset(n, frac, stage_seed(seed(cfg, a.seed)?, "synth"), &params, &out)?;
    let defects = manifest.labels().iter().filter(|&&l| l == 1).count();
    println!("wrote {n} patches ({defects} defective) to {}", out.display());
    Ok(())
}

fn cmd_extract(cfg: &Config, a: ExtractArgs) -> CliResult<()> {
    let manifest = require(path_opt(cfg, a.manifest, "dataset.manifest"), "--manifest")?;
    let out = require(path_opt(cfg, a.out, "extract.out"), "--out")?;
    let desc = descriptor(cfg, a.desc, a.cell)?;
    let params = edge_params(cfg)?;
    let (images, labels, ids) = load_images(&manifest)?;
    let data = build_dataset(&images, &labels, &ids, desc, &params)?;
    if out.extension().is_some_and(|e| e == "bin") {
        write_with(&out, |b| write_features_bin(b, &data, desc))?;
    } else {
        write_with(&out, |b| write_features_csv(b, &data))?;
    }
    if let Some(dir) = a.dump_edges {
        let Descriptor::Edge(method) = desc else {
            return Err(usage("--dump-edges needs an edge descriptor"));
        };
        dump_maps(&images, &ids, &[method], true, &params, &dir)?;
    }
    println!("{} rows x {} features ({desc}) -> {}", data.n_samples(), data.n_features(), out.display());
    Ok(())
}

fn cmd_cv(cfg: &Config, a: CvArgs) -> CliResult<()> {
    let out = require(path_opt(cfg, a.out, "output.dir"), "--out")?;
    let seed = seed(cfg, a.seed)?;
    let folds = cfg.pick(a.folds, "cv.folds", 5)?;
    if folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }
    let (fold_seed, model_seed) = (stage_seed(seed, "folds"), stage_seed(seed, "model"));
    let grid = a.grid.or_else(|| cfg.raw("cv.grid").map(String::from));
    if let Some(grid) = grid {
        let descriptors = match grid.as_str() {
            "edge" => Descriptor::EDGE,
            "stat" => Descriptor::STATISTICAL,
            other => return Err(usage(format!("--grid must be edge or stat, got '{other}'"))),
        };
        if a.source.features.is_some() {
            return Err(usage("--grid computes its own features; pass --manifest"));
        }
        let manifest = require(path_opt(cfg, a.source.manifest, "dataset.manifest"), "--manifest")?;
        let params = edge_params(cfg)?;
        let (images, labels, ids) = load_images(&manifest)?;
        let sets = descriptors
            .iter()
            .map(|&d| Ok((d.to_string(), build_dataset(&images, &labels, &ids, d, &params)?)))
            .collect::<crate::Result<Vec<_>>>()?;
        let kinds = match a.classifier {
            Some(name) => vec![classifier(cfg, Some(name))?],
            None => ClassifierKind::grid().to_vec(),
        };
        let table = run_grid(&sets, &kinds, folds, fold_seed, model_seed)?;
        write_with(&out.join("results.csv"), |b| table.write_csv(b))?;
        write_with(&out.join("confusion.csv"), |b| table.write_confusion_csv(b))?;
        println!("{} classifiers x {} descriptors -> {}", kinds.len(), sets.len(), out.display());
        return Ok(());
    }
    let kind = classifier(cfg, a.classifier)?;
    let data = load_source(cfg, a.source)?;
    let spec = ClassifierSpec::new(kind).with_seed(model_seed);
    let holdout_pct = match a.holdout {
        Some(p) => Some(p),
        None => cfg.get("cv.holdout")?,
    };
    let report = match holdout_pct {
        Some(p) => holdout(&data, &spec, split(p)?, fold_seed)?,
        None => cross_validate(&data, &spec, folds, fold_seed)?,
    };
    write_with(&out.join("results.csv"), |b| {
        use std::io::Write;
        writeln!(b, "classifier,samples,features,accuracy")?;
        writeln!(
            b,
            "{},{},{},{:.4}",
            kind.name(),
            data.n_samples(),
            data.n_features(),
            report.accuracy * 100.0
        )?;
        Ok(())
    })?;
    write_report(&out, &report)?;
    println!("{}: accuracy {:.2}%", kind.label(), report.accuracy * 100.0);
    Ok(())
}

fn cmd_ann_sweep(cfg: &Config, a: AnnArgs) -> CliResult<()> {
    let out = require(path_opt(cfg, a.out, "output.dir"), "--out")?;
    let g = match a.g {
        Some(g) => Some(g),
        None => cfg.get("ann.hidden")?,
    };
    let pct = match a.split {
        Some(p) => Some(p),
        None => cfg.get("ann.split")?,
    };
    let splits = match pct {
        Some(p) => vec![split(p)?],
        None => Split::all(),
    };
    if g == Some(0) {
        return Err(usage("--g must be positive"));
    }
    let data = load_source(cfg, a.source)?;
    let mut base = AnnConfig::new(data.n_features(), g.unwrap_or(HIDDEN_SIZES[0]));
    base.epochs = cfg.pick(a.epochs, "ann.epochs", base.epochs)?;
    if let Some(s) = a.hidden_activation.or_else(|| cfg.raw("ann.hidden_activation").map(String::from)) {
        base.hidden_activation = s.parse().map_err(|e: Error| usage(e.to_string()))?;
    }
    if let Some(s) = a.output_activation.or_else(|| cfg.raw("ann.output_activation").map(String::from)) {
        base.output_activation = s.parse().map_err(|e: Error| usage(e.to_string()))?;
    }
    base.seed = stage_seed(seed(cfg, a.seed)?, "ann");
    base.validate().map_err(|e| usage(e.to_string()))?;

    if let (Some(_), [s]) = (g, splits.as_slice()) {
        let run = train_ann(&data, base, *s)?;
        let cell = crate::ann::SweepCell {
            hidden: base.hidden,
            split: *s,
            run,
        };
        write_with(&out.join("sweep.csv"), |b| write_sweep_csv(std::slice::from_ref(&cell), b))?;
        for (name, rep) in [("train", &cell.run.train), ("test", &cell.run.test)] {
            write_with(&out.join(format!("confusion_{name}.csv")), |b| rep.confusion.write_csv(b))?;
            if let Some(roc) = &rep.roc {
                write_with(&out.join(format!("roc_{name}.csv")), |b| roc.write_csv(b))?;
            }
        }
        write_with(&out.join("loss.csv"), |b| {
            use std::io::Write;
            writeln!(b, "epoch,loss")?;
            for (i, l) in cell.run.loss_history.iter().enumerate() {
                writeln!(b, "{},{l}", i + 1)?;
            }
            Ok(())
        })?;
        println!(
            "g={} split {}: train {:.2}%, test {:.2}%",
            base.hidden,
            s,
            cell.run.train.accuracy * 100.0,
            cell.run.test.accuracy * 100.0
        );
        return Ok(());
    }
    let hidden = match g {
        Some(g) => vec![g],
        None => HIDDEN_SIZES.to_vec(),
    };
    let cells = ann_sweep(&data, base, &hidden, &splits)?;
    write_with(&out.join("sweep.csv"), |b| write_sweep_csv(&cells, b))?;
    println!("{} hidden sizes x {} splits -> {}", hidden.len(), splits.len(), out.display());
    Ok(())
}

fn cmd_roc(cfg: &Config, a: RocArgs) -> CliResult<()> {
    let out = require(path_opt(cfg, a.out, "roc.out"), "--out")?;
    let kind = classifier(cfg, a.classifier)?;
    let folds = cfg.pick(a.folds, "cv.folds", 5)?;
    if folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }
    let data = load_source(cfg, a.source)?;
    data.require_both_classes()?;
    let seed = seed(cfg, a.seed)?;
    let spec = ClassifierSpec::new(kind).with_seed(stage_seed(seed, "model"));
    let report = cross_validate(&data, &spec, folds, stage_seed(seed, "folds"))?;
    let roc = report.roc.ok_or(Error::SingleClassLabels)?;
    write_with(&out, |b| roc.write_csv(b))?;
    println!("{}: AUC {:.4}", kind.label(), roc.auc());
    Ok(())
}

fn cmd_dump_edges(cfg: &Config, a: DumpArgs) -> CliResult<()> {
    let out = require(path_opt(cfg, a.out, "output.dir"), "--out")?;
    let methods = match a.method {
        Some(m) => vec![m
            .parse::<EdgeMethod>()
            .map_err(|_| usage(format!("unknown edge method '{m}'")))?],
        None => EdgeMethod::ALL.to_vec(),
    };
    let params = edge_params(cfg)?;
    let (images, ids) = match (a.image, path_opt(cfg, a.manifest, "dataset.manifest")) {
        (Some(p), _) => {
            let id = p.file_name().map_or_else(|| "image".into(), |f| f.to_string_lossy().into_owned());
            (vec![load_image(&p)?], vec![id])
        }
        (None, Some(m)) => {
            let (images, _, ids) = load_images(&m)?;
            (images, ids)
        }
        (None, None) => return Err(usage("missing required --image or --manifest")),
    };
    dump_maps(&images, &ids, &methods, !a.no_resize, &params, &out)?;
    println!("{} maps -> {}", images.len() * methods.len(), out.display());
    Ok(())
}

fn dump_maps(
    images: &[crate::image::GrayImage],
    ids: &[String],
    methods: &[EdgeMethod],
    resize: bool,
    params: &EdgeParams,
    dir: &Path,
) -> CliResult<()> {
    for (img, id) in images.iter().zip(ids) {
        let img = if resize && (img.width() != PATCH_SIDE || img.height() != PATCH_SIDE) {
            resize_bilinear(img, PATCH_SIDE, PATCH_SIDE)?
        } else {
            img.clone()
        };
        let stem = Path::new(id).file_stem().map_or_else(|| id.clone(), |s| s.to_string_lossy().into_owned());
        for &m in methods {
            let map = detect_edges(&img, m, params)?;
            write_atomic(dir.join(format!("{stem}_{m}.pgm")), &encode_pgm(&map.to_image())?)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["dv", "synth", "--n", "10"]), EXIT_USAGE);
        assert_eq!(run(["dv", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["dv", "synth", "--n", "ten", "--out", "x"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(["dv", "--help"]), EXIT_OK);
    }
}
