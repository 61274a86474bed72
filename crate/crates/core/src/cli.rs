//! Command-line driver: argument and config resolution, artifact writing.
//!
//! Every artifact except `timings.txt` is a deterministic function of the
//! inputs and resolved parameters, independent of the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::boundary::{boundary_pixels, fit_model, uncertainty_band, BoundaryModel, ModelKind, UncertaintyBand};
use crate::config::KeyValues;
use crate::engine::{segment, qda_limit_params, LadaParams, Mode, SegmentationResult};
use crate::phantom::{make_cylinder_phantom, make_ring_phantom, CylinderPhantomSpec, Phantom, RingPhantomSpec};
use crate::raster::{
    parse_float_map, read_gray, read_mask, read_pgm, visualize_float_map, write_float_map, write_pgm, ClassMask,
    GrayImage, LabelMap, Pgm, PgmMode, ScalarMap, ToPgm,
};

pub const THREADS_ENV: &str = "LADA_THREADS";

/// Bad input or configuration (exit code 2). Fit failures are not errors:
/// they are reported through [`RunSummary::exit_code`] (exit code 3).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "lada", version, about = "Locally adaptive discriminant analysis for image segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment an image from a training mask and write all artifacts.
    Segment(SegmentArgs),
    /// Global quadratic discriminant baseline (same artifacts as `segment`).
    Qda(SegmentArgs),
    /// Generate a synthetic phantom with ground truth.
    Phantom(PhantomArgs),
    /// Fit boundaries and bands to an existing label map and p-value map.
    Boundaries(BoundariesArgs),
    /// Compare a label map against ground truth.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SegmentArgs {
    /// Flat key=value file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Locality radius in pixels.
    #[arg(short = 'd', long = "radius")]
    pub d: Option<usize>,
    /// Maximum local training pixels per class.
    #[arg(short = 'n', long = "per-class")]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Standard-deviation floor as a fraction of the intensity range.
    #[arg(long)]
    pub sigma_floor: Option<f64>,
    /// lada | qda | lda-local
    #[arg(long)]
    pub mode: Option<String>,
    /// Default model plus per-pair overrides, e.g. `line,1-2=logistic,3-4=circle`.
    #[arg(long)]
    pub fit: Option<String>,
    /// Band half-width around each fitted curve (default d/2).
    #[arg(long)]
    pub proximity: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rescale intensities to [0, 1] before segmenting.
    #[arg(long)]
    pub normalize: bool,
    /// P-value map used for bands: mle | anova
    #[arg(long)]
    pub band_map: Option<String>,
    /// Interfaces with fewer points are reported as skipped.
    #[arg(long)]
    pub min_boundary_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhantomKind {
    Cylinder,
    Ring,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    #[arg(value_enum)]
    pub kind: PhantomKind,
    /// Spec file; the built-in reference spec is used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BoundariesArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// Number of real classes C (label C+1 is the bonus class). Defaults to the largest label.
    #[arg(long)]
    pub classes: Option<u32>,
    /// P-value map CSV (as written by `segment`).
    #[arg(long)]
    pub pmap: PathBuf,
    #[arg(long, default_value = "line")]
    pub fit: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 12.5)]
    pub proximity: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_BOUNDARY_POINTS)]
    pub min_boundary_points: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub classes: Option<u32>,
}

pub const DEFAULT_RADIUS: usize = 25;
pub const DEFAULT_PER_CLASS: usize = 25;
pub const DEFAULT_MIN_BOUNDARY_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandMap {
    #[default]
    Mle,
    Anova,
}

impl FromStr for BandMap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mle" => Ok(Self::Mle),
            "anova" => Ok(Self::Anova),
            other => Err(format!("unknown band map {other:?} (mle|anova)")),
        }
    }
}

/// Boundary model per class pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitSelection {
    pub default: ModelKind,
    pub overrides: BTreeMap<(u32, u32), ModelKind>,
}

impl Default for FitSelection {
    fn default() -> Self {
        Self {
            default: ModelKind::Line,
            overrides: BTreeMap::new(),
        }
    }
}

impl FitSelection {
    pub fn kind_for(&self, a: u32, b: u32) -> ModelKind {
        let key = (a.min(b), a.max(b));
        self.overrides.get(&key).copied().unwrap_or(self.default)
    }
}

impl FromStr for FitSelection {
    type Err = String;

    /// `kind` or `a-b=kind` items separated by commas or semicolons.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut sel = Self::default();
        for item in s.split([',', ';']).map(str::trim).filter(|i| !i.is_empty()) {
            match item.split_once('=') {
                None => sel.default = item.parse()?,
                Some((pair, kind)) => {
                    let (a, b) = pair
                        .split_once('-')
                        .ok_or_else(|| format!("bad pair {pair:?}, expected `a-b`"))?;
                    let a: u32 = a.trim().parse().map_err(|_| format!("bad class id {a:?}"))?;
                    let b: u32 = b.trim().parse().map_err(|_| format!("bad class id {b:?}"))?;
                    if a == b || a == 0 || b == 0 {
                        return Err(format!("bad class pair {a}-{b}"));
                    }
                    sel.overrides.insert((a.min(b), a.max(b)), kind.parse()?);
                }
            }
        }
        Ok(sel)
    }
}

/// Fully resolved parameters of one segmentation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub radius: usize,
    pub per_class: usize,
    pub alpha: f64,
    pub sigma_floor: f64,
    pub mode: Mode,
    pub fit: FitSelection,
    pub proximity: f64,
    pub out: PathBuf,
    pub normalize: bool,
    pub band_map: BandMap,
    pub min_boundary_points: usize,
}

impl RunConfig {
    pub fn new(image: impl Into<PathBuf>, mask: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            image: image.into(),
            mask: mask.into(),
            radius: DEFAULT_RADIUS,
            per_class: DEFAULT_PER_CLASS,
            alpha: 0.05,
            sigma_floor: 1e-12,
            mode: Mode::Lada,
            fit: FitSelection::default(),
            proximity: DEFAULT_RADIUS as f64 / 2.0,
            out: out.into(),
            normalize: false,
            band_map: BandMap::Mle,
            min_boundary_points: DEFAULT_MIN_BOUNDARY_POINTS,
        }
    }

    /// Merges config-file entries with flags (flags win). `forced_mode`
    /// overrides both, as the `qda` subcommand does.
    pub fn resolve(args: &SegmentArgs, forced_mode: Option<Mode>) -> Result<Self, CliError> {
        let kv = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(input(path.display()))?;
                KeyValues::parse(&text).map_err(input(path.display()))?
            }
            None => KeyValues::default(),
        };
        const KNOWN: [&str; 13] = [
            "image",
            "mask",
            "d",
            "n",
            "alpha",
            "sigma_floor",
            "mode",
            "fit",
            "proximity",
            "out",
            "normalize",
            "band_map",
            "min_boundary_points",
        ];
        if let Some(key) = kv.keys().find(|k| !KNOWN.contains(k)) {
            return Err(CliError::Input(format!("unknown config key {key:?}")));
        }
        let get = |key: &str| kv.raw(key).map(str::to_string);
        fn parsed<T: FromStr>(key: &str, flag: Option<T>, file: Option<String>) -> Result<Option<T>, CliError>
        where
            T::Err: std::fmt::Display,
        {
            match (flag, file) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => s
                    .parse()
                    .map(Some)
                    .map_err(|e: T::Err| CliError::Input(format!("config key {key:?}: {e}"))),
                (None, None) => Ok(None),
            }
        }
        let image = args
            .image
            .clone()
            .or_else(|| get("image").map(PathBuf::from))
            .ok_or_else(|| CliError::Input("no input image (--image)".into()))?;
        let mask = args
            .mask
            .clone()
            .or_else(|| get("mask").map(PathBuf::from))
            .ok_or_else(|| CliError::Input("no training mask (--mask)".into()))?;
        let out = args
            .out
            .clone()
            .or_else(|| get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let mut cfg = Self::new(image, mask, out);
        cfg.radius = parsed("d", args.d, get("d"))?.unwrap_or(DEFAULT_RADIUS);
        cfg.per_class = parsed("n", args.n, get("n"))?.unwrap_or(DEFAULT_PER_CLASS);
        cfg.alpha = parsed("alpha", args.alpha, get("alpha"))?.unwrap_or(0.05);
        cfg.sigma_floor = parsed("sigma_floor", args.sigma_floor, get("sigma_floor"))?.unwrap_or(1e-12);
        let mode: Option<Mode> = parsed("mode", args.mode.as_deref().map(str::parse).transpose().map_err(CliError::Input)?, get("mode"))?;
        cfg.mode = forced_mode.or(mode).unwrap_or(Mode::Lada);
        let fit: Option<FitSelection> =
            parsed("fit", args.fit.as_deref().map(str::parse).transpose().map_err(CliError::Input)?, get("fit"))?;
        cfg.fit = fit.unwrap_or_default();
        cfg.proximity = parsed("proximity", args.proximity, get("proximity"))?.unwrap_or(cfg.radius as f64 / 2.0);
        let normalize: Option<bool> = parsed("normalize", args.normalize.then_some(true), get("normalize"))?;
        cfg.normalize = normalize.unwrap_or(false);
        let band: Option<BandMap> = parsed(
            "band_map",
            args.band_map.as_deref().map(str::parse).transpose().map_err(CliError::Input)?,
            get("band_map"),
        )?;
        cfg.band_map = band.unwrap_or_default();
        cfg.min_boundary_points = parsed("min_boundary_points", args.min_boundary_points, get("min_boundary_points"))?
            .unwrap_or(DEFAULT_MIN_BOUNDARY_POINTS);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> LadaParams {
        LadaParams {
            radius: self.radius,
            per_class: self.per_class,
            alpha: self.alpha,
            sigma_floor: self.sigma_floor,
            mode: self.mode,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params().validate().map_err(input("parameters"))?;
        if !(self.proximity > 0.0 && self.proximity.is_finite()) {
            return Err(CliError::Input(format!("proximity must be > 0, got {}", self.proximity)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryStatus {
    Fitted {
        model: BoundaryModel,
        rms_residual: f64,
        band: UncertaintyBand,
    },
    /// Too few interface points to fit.
    Skipped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecord {
    pub class_a: u32,
    pub class_b: u32,
    pub kind: ModelKind,
    pub points: usize,
    pub status: BoundaryStatus,
}

impl BoundaryRecord {
    pub fn model(&self) -> Option<&BoundaryModel> {
        match &self.status {
            BoundaryStatus::Fitted { model, .. } => Some(model),
            _ => None,
        }
    }

    pub fn band(&self) -> Option<&UncertaintyBand> {
        match &self.status {
            BoundaryStatus::Fitted { band, .. } => Some(band),
            _ => None,
        }
    }
}

/// Fits every class interface of `labels` (bonus pixels ignored) and
/// selects its uncertainty band on `pmap`.
pub fn fit_boundaries(
    labels: &LabelMap,
    pmap: &ScalarMap,
    fit: &FitSelection,
    alpha: f64,
    proximity: f64,
    min_points: usize,
) -> Result<Vec<BoundaryRecord>, CliError> {
    if (labels.width(), labels.height()) != (pmap.width(), pmap.height()) {
        return Err(CliError::Input("label map and p-value map sizes differ".into()));
    }
    let mut records = Vec::new();
    for set in boundary_pixels(labels, true) {
        let kind = fit.kind_for(set.class_a, set.class_b);
        let status = if set.points.len() < min_points.max(1) {
            BoundaryStatus::Skipped
        } else {
            match fit_model(kind, &set.points) {
                Ok(model) => {
                    let band = uncertainty_band(pmap, &model, alpha, proximity).map_err(input("band"))?;
                    BoundaryStatus::Fitted {
                        rms_residual: model.rms_residual(&set.points),
                        model,
                        band,
                    }
                }
                Err(e) => BoundaryStatus::Failed(e.to_string()),
            }
        };
        records.push(BoundaryRecord {
            class_a: set.class_a,
            class_b: set.class_b,
            kind,
            points: set.points.len(),
            status,
        });
    }
    Ok(records)
}

pub fn boundaries_csv(records: &[BoundaryRecord]) -> String {
    let mut out = String::from(
        "class_a,class_b,model,status,points,parameters,rms_residual,band_pixels,band_width,band_r_min,band_r_max\n",
    );
    for rec in records {
        let _ = write!(out, "{},{},{},", rec.class_a, rec.class_b, rec.kind);
        match &rec.status {
            BoundaryStatus::Fitted {
                model,
                rms_residual,
                band,
            } => {
                let params: Vec<String> = model
                    .parameter_names()
                    .iter()
                    .zip(model.parameters())
                    .map(|(name, v)| format!("{name}={v:.6}"))
                    .collect();
                let (lo, hi) = band
                    .radial
                    .map_or((String::new(), String::new()), |r| (format!("{:.6}", r.r_min), format!("{:.6}", r.r_max)));
                let _ = writeln!(
                    out,
                    "fitted,{},{},{:.6},{},{:.6},{},{}",
                    rec.points,
                    params.join(";"),
                    rms_residual,
                    band.pixels.len(),
                    band.width(model),
                    lo,
                    hi
                );
            }
            BoundaryStatus::Skipped => {
                let _ = writeln!(out, "skipped,{},,,,,,", rec.points);
            }
            BoundaryStatus::Failed(msg) => {
                let _ = writeln!(out, "failed,{},{:?},,,,,", rec.points, msg.replace(',', ";"));
            }
        }
    }
    out
}

/// White canvas, band pixels gray (128), pixels within half a pixel of a
/// fitted curve black.
pub fn render_overlay(width: usize, height: usize, records: &[BoundaryRecord]) -> Pgm {
    let mut samples = vec![255u32; width * height];
    for band in records.iter().filter_map(BoundaryRecord::band) {
        for &(r, c) in &band.pixels {
            samples[r * width + c] = 128;
        }
    }
    for model in records.iter().filter_map(BoundaryRecord::model) {
        for r in 0..height {
            for c in 0..width {
                if model.distance_within(r as f64, c as f64, 0.5).is_some() {
                    samples[r * width + c] = 0;
                }
            }
        }
    }
    Pgm::new(width, height, 255, samples).expect("overlay dimensions are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub result: SegmentationResult,
    pub boundaries: Vec<BoundaryRecord>,
    pub labeled_fraction: f64,
}

impl RunSummary {
    pub fn fit_failures(&self) -> usize {
        self.boundaries
            .iter()
            .filter(|b| matches!(b.status, BoundaryStatus::Failed(_)))
            .count()
    }

    pub fn exit_code(&self) -> u8 {
        if self.fit_failures() > 0 {
            3
        } else {
            0
        }
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(input(path.display()))
}

pub fn load_image(path: &Path) -> Result<GrayImage, CliError> {
    let bytes = fs::read(path).map_err(input(path.display()))?;
    read_gray(&bytes).map_err(input(path.display()))
}

pub fn load_mask(path: &Path) -> Result<ClassMask, CliError> {
    let bytes = fs::read(path).map_err(input(path.display()))?;
    read_mask(&bytes).map_err(input(path.display()))
}

/// Reads a label map; `classes` defaults to the largest label present.
pub fn load_labels(path: &Path, classes: Option<u32>) -> Result<LabelMap, CliError> {
    let bytes = fs::read(path).map_err(input(path.display()))?;
    let pgm = read_pgm(&bytes).map_err(input(path.display()))?;
    let c = classes.unwrap_or_else(|| pgm.samples.iter().copied().max().unwrap_or(1));
    LabelMap::new(pgm.width, pgm.height, pgm.samples, c).map_err(input(path.display()))
}

/// Runs one segmentation and writes the artifact set into `cfg.out`.
///
/// Fit failures do not abort: the remaining artifacts are still written and
/// the failure is reported through [`RunSummary::exit_code`].
pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut image = load_image(&cfg.image)?;
    let mask = load_mask(&cfg.mask)?;
    if cfg.normalize {
        image = image.normalized();
    }
    fs::create_dir_all(&cfg.out).map_err(input(cfg.out.display()))?;
    let loaded = start.elapsed();

    let result = segment(&image, &mask, &cfg.params()).map_err(input("segmentation"))?;
    let segmented = start.elapsed();
    let dir = cfg.out.as_path();
    let pgm = |m: &dyn ToPgm, mode| write_pgm(m, mode).map_err(input("encode"));
    write_file(dir, "labels.pgm", &pgm(&result.labels, PgmMode::Ascii)?)?;
    write_file(dir, "mle_p.csv", &write_float_map(&result.mle_p))?;
    write_file(dir, "mle_p.pgm", &visualize_float_map(&result.mle_p).encode(PgmMode::Binary))?;
    write_file(dir, "anova_p.csv", &write_float_map(&result.anova_p))?;
    write_file(dir, "anova_p.pgm", &visualize_float_map(&result.anova_p).encode(PgmMode::Binary))?;

    let band_source = match cfg.band_map {
        BandMap::Mle => &result.mle_p,
        BandMap::Anova => &result.anova_p,
    };
    let records = fit_boundaries(
        &result.labels,
        band_source,
        &cfg.fit,
        cfg.alpha,
        cfg.proximity,
        cfg.min_boundary_points,
    )?;
    write_file(dir, "boundaries.csv", boundaries_csv(&records).as_bytes())?;
    let overlay = render_overlay(image.width(), image.height(), &records);
    write_file(dir, "overlay.pgm", &overlay.encode(PgmMode::Binary))?;
    let fitted = start.elapsed();

    let summary = RunSummary {
        labeled_fraction: mask.labeled_fraction(),
        result,
        boundaries: records,
    };
    write_file(dir, "run_report.txt", run_report(cfg, &image, &mask, &summary).as_bytes())?;
    let timings = format!(
        "load_seconds={:.6}\nsegment_seconds={:.6}\nboundaries_seconds={:.6}\ntotal_seconds={:.6}\nthreads={}\n",
        loaded.as_secs_f64(),
        (segmented - loaded).as_secs_f64(),
        (fitted - segmented).as_secs_f64(),
        start.elapsed().as_secs_f64(),
        rayon::current_num_threads()
    );
    write_file(dir, "timings.txt", timings.as_bytes())?;
    Ok(summary)
}

fn run_report(cfg: &RunConfig, image: &GrayImage, mask: &ClassMask, summary: &RunSummary) -> String {
    let mut s = String::new();
    let (radius, per_class) = match cfg.mode {
        Mode::Qda => qda_limit_params(image, mask),
        _ => (cfg.radius, cfg.per_class),
    };
    let _ = writeln!(s, "image={}", cfg.image.display());
    let _ = writeln!(s, "mask={}", cfg.mask.display());
    let _ = writeln!(s, "width={}\nheight={}", image.width(), image.height());
    let _ = writeln!(s, "classes={}", mask.class_count());
    let _ = writeln!(s, "mode={}", cfg.mode);
    let _ = writeln!(s, "d={radius}\nn={per_class}");
    let _ = writeln!(s, "alpha={}\nsigma_floor={}", cfg.alpha, cfg.sigma_floor);
    let _ = writeln!(s, "normalize={}", cfg.normalize);
    let _ = writeln!(
        s,
        "band_map={}\nproximity={}",
        match cfg.band_map {
            BandMap::Mle => "mle",
            BandMap::Anova => "anova",
        },
        cfg.proximity
    );
    let r = &summary.result;
    let _ = writeln!(s, "labeled_fraction={:.6}", summary.labeled_fraction);
    let _ = writeln!(s, "bonus_fraction={:.6}", r.bonus_fraction);
    let _ = writeln!(s, "training_consistency={:.6}", r.training_consistency);
    let total = (image.width() * image.height()) as f64;
    let _ = writeln!(s, "mle_p_defined={:.6}", r.mle_p.defined_count() as f64 / total);
    let _ = writeln!(s, "anova_p_defined={:.6}", r.anova_p.defined_count() as f64 / total);
    let count = |f: fn(&BoundaryStatus) -> bool| summary.boundaries.iter().filter(|b| f(&b.status)).count();
    let _ = writeln!(s, "boundaries_fitted={}", count(|st| matches!(st, BoundaryStatus::Fitted { .. })));
    let _ = writeln!(s, "boundaries_skipped={}", count(|st| matches!(st, BoundaryStatus::Skipped)));
    let _ = writeln!(s, "boundaries_failed={}", summary.fit_failures());
    let _ = writeln!(s, "status={}", if summary.exit_code() == 0 { "ok" } else { "fit_failure" });
    let _ = writeln!(s, "timings=timings.txt");
    s
}

/// Rounds and clamps intensities to non-negative integers so they fit a graymap.
pub fn quantize(image: &GrayImage) -> GrayImage {
    GrayImage::from_fn(image.width(), image.height(), |r, c| {
        image.get(r, c).round().clamp(0.0, 65535.0)
    })
    .expect("rounded intensities are finite")
}

pub fn write_phantom(ph: &Phantom, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(input(dir.display()))?;
    let enc = |m: &dyn ToPgm, mode| write_pgm(m, mode).map_err(input("encode"));
    write_file(dir, "image.pgm", &enc(&quantize(&ph.image), PgmMode::Binary)?)?;
    write_file(dir, "mask.pgm", &enc(&ph.mask, PgmMode::Binary)?)?;
    write_file(dir, "truth.pgm", &enc(&ph.truth, PgmMode::Binary)?)?;
    let mut csv = String::from("class_a,class_b,model,parameters\n");
    for b in &ph.boundaries {
        let params: Vec<String> = b
            .model
            .parameter_names()
            .iter()
            .zip(b.model.parameters())
            .map(|(n, v)| format!("{n}={v:.6}"))
            .collect();
        let _ = writeln!(csv, "{},{},{},{}", b.class_a, b.class_b, b.model.kind(), params.join(";"));
    }
    write_file(dir, "truth.csv", csv.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelComparison {
    pub pixels: usize,
    pub accuracy: f64,
    pub bonus_fraction: f64,
    /// `(class, truth pixels, recall)` for every class present in the truth.
    pub recall: Vec<(u32, usize, f64)>,
}

pub fn compare_labels(labels: &LabelMap, truth: &LabelMap) -> Result<LabelComparison, CliError> {
    if (labels.width(), labels.height()) != (truth.width(), truth.height()) {
        return Err(CliError::Input("label map and truth sizes differ".into()));
    }
    let n = labels.labels().len();
    let mut per: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    let mut agree = 0;
    for (&l, &t) in labels.labels().iter().zip(truth.labels()) {
        let e = per.entry(t).or_default();
        e.0 += 1;
        if l == t {
            e.1 += 1;
            agree += 1;
        }
    }
    let bonus = labels.labels().iter().filter(|&&l| l == labels.bonus_label()).count();
    Ok(LabelComparison {
        pixels: n,
        accuracy: agree as f64 / n as f64,
        bonus_fraction: bonus as f64 / n as f64,
        recall: per
            .into_iter()
            .map(|(c, (total, hit))| (c, total, hit as f64 / total as f64))
            .collect(),
    })
}

fn report_text(cmp: &LabelComparison) -> String {
    let mut s = format!(
        "pixels={}\naccuracy={:.6}\nbonus_fraction={:.6}\n",
        cmp.pixels, cmp.accuracy, cmp.bonus_fraction
    );
    for (c, total, recall) in &cmp.recall {
        let _ = writeln!(s, "class_{c}_pixels={total}\nclass_{c}_recall={recall:.6}");
    }
    s
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Segment(args) => Ok(run(&RunConfig::resolve(&args, None)?)?.exit_code()),
        Command::Qda(args) => Ok(run(&RunConfig::resolve(&args, Some(Mode::Qda))?)?.exit_code()),
        Command::Phantom(args) => {
            let kv = match &args.config {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(input(path.display()))?;
                    Some(KeyValues::parse(&text).map_err(input(path.display()))?)
                }
                None => None,
            };
            let ph = match args.kind {
                PhantomKind::Cylinder => {
                    let spec = match &kv {
                        Some(kv) => CylinderPhantomSpec::from_config(kv).map_err(input("cylinder spec"))?,
                        None => CylinderPhantomSpec::reference(),
                    };
                    make_cylinder_phantom(&spec, args.seed).map_err(input("cylinder spec"))?
                }
                PhantomKind::Ring => {
                    let spec = match &kv {
                        Some(kv) => RingPhantomSpec::from_config(kv).map_err(input("ring spec"))?,
                        None => RingPhantomSpec::reference(),
                    };
                    make_ring_phantom(&spec, args.seed).map_err(input("ring spec"))?
                }
            };
            write_phantom(&ph, &args.out)?;
            Ok(0)
        }
        Command::Boundaries(args) => {
            let labels = load_labels(&args.labels, args.classes)?;
            let bytes = fs::read(&args.pmap).map_err(input(args.pmap.display()))?;
            let pmap = parse_float_map(&bytes).map_err(input(args.pmap.display()))?;
            let fit: FitSelection = args.fit.parse().map_err(CliError::Input)?;
            if !(args.proximity > 0.0) {
                return Err(CliError::Input("proximity must be > 0".into()));
            }
            let records = fit_boundaries(&labels, &pmap, &fit, args.alpha, args.proximity, args.min_boundary_points)?;
            fs::create_dir_all(&args.out).map_err(input(args.out.display()))?;
            write_file(&args.out, "boundaries.csv", boundaries_csv(&records).as_bytes())?;
            let overlay = render_overlay(labels.width(), labels.height(), &records);
            write_file(&args.out, "overlay.pgm", &overlay.encode(PgmMode::Binary))?;
            let failed = records
                .iter()
                .any(|r| matches!(r.status, BoundaryStatus::Failed(_)));
            Ok(if failed { 3 } else { 0 })
        }
        Command::Report(args) => {
            let labels = load_labels(&args.labels, args.classes)?;
            let truth = load_labels(&args.truth, Some(labels.class_count()))?;
            print!("{}", report_text(&compare_labels(&labels, &truth)?));
            Ok(0)
        }
    }
}
