//! Locally adaptive discriminant analysis.
//!
//! Every pixel is classified by a Gaussian maximum-likelihood rule built only
//! from nearby training pixels: at most `per_class` of each class, all within
//! `radius` of the pixel. Classes with fewer than [`MIN_SAMPLES`] local
//! pixels are ignored; when none remain the pixel goes to the bonus class
//! `C + 1`. Alongside the labels the engine produces two p-value maps:
//!
//! * MLE map: two-sided tail probability of the pixel under its winning class.
//!   Undefined on bonus pixels.
//! * ANOVA map: largest pairwise equal-means p-value among the qualifying
//!   local classes. Undefined where fewer than two classes qualify.
//!
//! Samples are sorted before any statistic is computed, so results depend
//! only on the set of selected pixels, never on the order they were found in.

use rayon::prelude::*;
use thiserror::Error;

use crate::neighborhood::{disk_offsets, scan_local, OffsetTable};
use crate::raster::{ClassMask, GrayImage, LabelMap, RasterError, ScalarMap};
use crate::stats::{anova_pair_pvalue, mean_and_variance, mle_pvalue, GaussianStats, StatsError};

/// Minimum number of local training pixels for a class to be considered.
pub const MIN_SAMPLES: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Lada,
    /// Global limit: all training pixels of every class, for every pixel.
    Qda,
    /// Local classes share the pooled local standard deviation.
    LdaLocal,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lada" => Ok(Self::Lada),
            "qda" => Ok(Self::Qda),
            "lda-local" | "lda_local" => Ok(Self::LdaLocal),
            other => Err(format!("unknown mode {other:?} (lada|qda|lda-local)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lada => "lada",
            Self::Qda => "qda",
            Self::LdaLocal => "lda-local",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadaParams {
    /// Locality radius `d` in pixels.
    pub radius: usize,
    /// Cap `n` on local training pixels per class.
    pub per_class: usize,
    pub alpha: f64,
    /// Standard-deviation floor as a fraction of the image intensity range.
    pub sigma_floor: f64,
    pub mode: Mode,
}

impl LadaParams {
    pub fn new(radius: usize, per_class: usize) -> Self {
        Self {
            radius,
            per_class,
            alpha: 0.05,
            sigma_floor: 1e-12,
            mode: Mode::Lada,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.radius == 0 {
            return Err(EngineError::Argument("radius d must be >= 1".into()));
        }
        if self.per_class == 0 {
            return Err(EngineError::Argument("per-class cap n must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EngineError::Argument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.sigma_floor >= 0.0 && self.sigma_floor.is_finite()) {
            return Err(EngineError::Argument(format!(
                "sigma floor must be finite and >= 0, got {}",
                self.sigma_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub labels: LabelMap,
    pub mle_p: ScalarMap,
    pub anova_p: ScalarMap,
    /// Statistics of the winning class; `None` on bonus pixels.
    pub winner_stats: Vec<Option<GaussianStats>>,
    pub bonus_fraction: f64,
    /// Fraction of training pixels whose output label matches their mask label.
    pub training_consistency: f64,
}

/// Mean, floored sample standard deviation and count of `samples`.
pub fn local_class_stats(samples: &[f64], sigma_floor: f64) -> Result<GaussianStats, EngineError> {
    if samples.is_empty() {
        return Err(EngineError::Argument("cannot summarize an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(stats_of_sorted(&sorted, sigma_floor))
}

fn stats_of_sorted(sorted: &[f64], sigma_floor: f64) -> GaussianStats {
    let (mean, var) = mean_and_variance(sorted);
    GaussianStats {
        mean,
        std: var.sqrt().max(sigma_floor),
        count: sorted.len(),
    }
}

/// Gaussian argmax over `candidates`; the smallest class id wins exact ties.
/// An empty candidate list yields the bonus class `class_count + 1`.
pub fn classify_pixel(x: f64, candidates: &[(u32, GaussianStats)], class_count: u32) -> u32 {
    let mut best: Option<(u32, f64)> = None;
    for &(id, ref stats) in candidates {
        let ld = stats.log_density(x);
        best = match best {
            None => Some((id, ld)),
            Some((bid, bld)) if ld > bld || (ld == bld && id < bid) => Some((id, ld)),
            keep => keep,
        };
    }
    best.map_or(class_count + 1, |(id, _)| id)
}

/// Qualifying classes at one pixel plus their ANOVA p-value.
struct LocalModel {
    candidates: Vec<(u32, GaussianStats)>,
    anova: Option<f64>,
}

/// `sets[c - 1]` holds the samples of class `c`; each qualifying set is sorted in place.
fn build_model(sets: &mut [Vec<f64>], floor: f64, pooled: bool) -> Result<LocalModel, StatsError> {
    let mut candidates = Vec::new();
    for (idx, set) in sets.iter_mut().enumerate() {
        if set.len() >= MIN_SAMPLES {
            set.sort_by(f64::total_cmp);
            candidates.push((idx as u32 + 1, stats_of_sorted(set, floor)));
        }
    }
    if pooled && !candidates.is_empty() {
        let mut weighted = 0.0;
        let mut total = 0usize;
        for &(id, ref s) in &candidates {
            let (_, var) = mean_and_variance(&sets[id as usize - 1]);
            weighted += s.count as f64 * var;
            total += s.count;
        }
        let sigma = (weighted / total as f64).sqrt().max(floor);
        for (_, s) in candidates.iter_mut() {
            s.std = sigma;
        }
    }
    let mut anova: Option<f64> = None;
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let a = &sets[candidates[i].0 as usize - 1];
            let b = &sets[candidates[j].0 as usize - 1];
            let p = anova_pair_pvalue(a, b)?;
            anova = Some(anova.map_or(p, |q: f64| q.max(p)));
        }
    }
    Ok(LocalModel { candidates, anova })
}

#[derive(Clone, Copy)]
struct PixelOutcome {
    label: u32,
    stats: Option<GaussianStats>,
    mle: Option<f64>,
    anova: Option<f64>,
}

fn decide(x: f64, model: &LocalModel, class_count: u32) -> PixelOutcome {
    let label = classify_pixel(x, &model.candidates, class_count);
    let stats = model
        .candidates
        .iter()
        .find(|(id, _)| *id == label)
        .map(|(_, s)| *s);
    PixelOutcome {
        label,
        stats,
        mle: stats.map(|s| mle_pvalue(x, &s)),
        anova: model.anova,
    }
}

/// Absolute standard-deviation floor for `image`.
fn absolute_floor(image: &GrayImage, relative: f64) -> f64 {
    let (lo, hi) = image.range();
    let span = hi - lo;
    relative * if span > 0.0 { span } else { 1.0 }
}

fn check_inputs(image: &GrayImage, mask: &ClassMask) -> Result<(), EngineError> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(EngineError::Argument(format!(
            "image is {}x{} but mask is {}x{}",
            image.width(),
            image.height(),
            mask.width(),
            mask.height()
        )));
    }
    if mask.class_count() == 0 || mask.labels().iter().all(|&l| l == 0) {
        return Err(EngineError::Argument("mask contains no training labels".into()));
    }
    Ok(())
}

/// Runs the segmentation in the mode named by `params.mode`.
///
/// Pixels are processed as a parallel map over rows on the current rayon
/// pool; each pixel depends only on the immutable inputs, so the output is
/// identical for any thread count.
pub fn segment(
    image: &GrayImage,
    mask: &ClassMask,
    params: &LadaParams,
) -> Result<SegmentationResult, EngineError> {
    params.validate()?;
    check_inputs(image, mask)?;
    let floor = absolute_floor(image, params.sigma_floor);
    let outcomes = match params.mode {
        Mode::Qda => global_outcomes(image, mask, floor)?,
        Mode::Lada => local_outcomes(image, mask, params, floor, false)?,
        Mode::LdaLocal => local_outcomes(image, mask, params, floor, true)?,
    };
    assemble(image, mask, outcomes)
}

/// Quadratic discriminant analysis: the global limit of [`segment`], with
/// radius at least the image diagonal and cap at least the largest class.
pub fn qda_segment(image: &GrayImage, mask: &ClassMask) -> Result<SegmentationResult, EngineError> {
    let (radius, per_class) = qda_limit_params(image, mask);
    segment(image, mask, &LadaParams::new(radius, per_class).with_mode(Mode::Qda))
}

/// Local segmentation with a shared (pooled) local standard deviation.
pub fn lda_local_segment(
    image: &GrayImage,
    mask: &ClassMask,
    params: &LadaParams,
) -> Result<SegmentationResult, EngineError> {
    segment(image, mask, &params.with_mode(Mode::LdaLocal))
}

/// `(ceil(diagonal), largest class size)`: the parameters at which the
/// local rule sees every training pixel from every pixel.
pub fn qda_limit_params(image: &GrayImage, mask: &ClassMask) -> (usize, usize) {
    let (w, h) = (image.width() as f64, image.height() as f64);
    let radius = (w * w + h * h).sqrt().ceil() as usize;
    let per_class = mask.class_sizes().iter().skip(1).copied().max().unwrap_or(0).max(1);
    (radius, per_class)
}

fn local_outcomes(
    image: &GrayImage,
    mask: &ClassMask,
    params: &LadaParams,
    floor: f64,
    pooled: bool,
) -> Result<Vec<PixelOutcome>, EngineError> {
    let table: OffsetTable = disk_offsets(params.radius);
    let class_count = mask.class_count();
    let width = image.width();
    let rows: Vec<Vec<PixelOutcome>> = (0..image.height())
        .into_par_iter()
        .map(|row| {
            let mut sets: Vec<Vec<f64>> = vec![Vec::with_capacity(params.per_class.min(1024)); class_count as usize];
            let mut counts = vec![0usize; class_count as usize + 1];
            let mut out = Vec::with_capacity(width);
            for col in 0..width {
                sets.iter_mut().for_each(Vec::clear);
                scan_local(mask, (row, col), &table, params.per_class, &mut counts, |class, r, c| {
                    sets[class as usize - 1].push(image.get(r, c));
                });
                let model = build_model(&mut sets, floor, pooled)?;
                out.push(decide(image.get(row, col), &model, class_count));
            }
            Ok(out)
        })
        .collect::<Result<_, StatsError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn global_outcomes(
    image: &GrayImage,
    mask: &ClassMask,
    floor: f64,
) -> Result<Vec<PixelOutcome>, EngineError> {
    let class_count = mask.class_count();
    let mut sets: Vec<Vec<f64>> = vec![Vec::new(); class_count as usize];
    for (&label, &x) in mask.labels().iter().zip(image.data()) {
        if label > 0 {
            sets[label as usize - 1].push(x);
        }
    }
    let model = build_model(&mut sets, floor, false)?;
    Ok(image
        .data()
        .par_iter()
        .map(|&x| decide(x, &model, class_count))
        .collect())
}

fn assemble(
    image: &GrayImage,
    mask: &ClassMask,
    outcomes: Vec<PixelOutcome>,
) -> Result<SegmentationResult, EngineError> {
    let (w, h) = (image.width(), image.height());
    let class_count = mask.class_count();
    let labels: Vec<u32> = outcomes.iter().map(|o| o.label).collect();
    let bonus = labels.iter().filter(|&&l| l == class_count + 1).count();
    let (mut trained, mut agree) = (0usize, 0usize);
    for (&m, &l) in mask.labels().iter().zip(&labels) {
        if m > 0 {
            trained += 1;
            agree += usize::from(m == l);
        }
    }
    Ok(SegmentationResult {
        mle_p: ScalarMap::new(w, h, outcomes.iter().map(|o| o.mle).collect())?,
        anova_p: ScalarMap::new(w, h, outcomes.iter().map(|o| o.anova).collect())?,
        winner_stats: outcomes.iter().map(|o| o.stats).collect(),
        labels: LabelMap::new(w, h, labels, class_count)?,
        bonus_fraction: bonus as f64 / (w * h) as f64,
        training_consistency: agree as f64 / trained as f64,
    })
}
