//! Gaussian summary statistics and the two per-pixel p-values.

mod special;

pub use special::{
    erfc, f_cdf, f_sf, ln_beta, ln_gamma, normal_cdf, normal_sf, regularized_incomplete_beta,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("argument error: {0}")]
    Domain(String),
    #[error("incomplete beta did not converge (a={a}, b={b}, x={x})")]
    NoConvergence { a: f64, b: f64, x: f64 },
}

/// Mean, standard deviation and sample count of one class's training pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl GaussianStats {
    /// Gaussian log-density up to the shared `-ln sqrt(2 pi)` constant.
    #[inline]
    pub fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -self.std.ln() - 0.5 * z * z
    }
}

/// Arithmetic mean and unbiased (n-1) variance; the variance is 0 for a single sample.
pub fn mean_and_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Two-sided tail probability of `x` under `N(mean, std)`.
///
/// With `std == 0` the p-value is 1 at the mean and 0 elsewhere.
pub fn mle_pvalue(x: f64, stats: &GaussianStats) -> f64 {
    let dev = (x - stats.mean).abs();
    if stats.std <= 0.0 {
        return if dev == 0.0 { 1.0 } else { 0.0 };
    }
    erfc(dev / stats.std * std::f64::consts::FRAC_1_SQRT_2).clamp(0.0, 1.0)
}

/// One-way ANOVA p-value for two groups (equal-means null).
///
/// `F = MSB / MSW` with `(1, |A|+|B|-2)` degrees of freedom. Zero
/// within-group variance gives 1 for equal means and 0 otherwise.
/// The computation is symmetric in its arguments, so swapping them yields
/// the bitwise-identical value.
pub fn anova_pair_pvalue(group_a: &[f64], group_b: &[f64]) -> Result<f64, StatsError> {
    let (na, nb) = (group_a.len(), group_b.len());
    if na < 2 || nb < 2 {
        return Err(StatsError::Domain(format!(
            "ANOVA needs at least two samples per group (got {na} and {nb})"
        )));
    }
    let mean_a = group_a.iter().sum::<f64>() / na as f64;
    let mean_b = group_b.iter().sum::<f64>() / nb as f64;
    if mean_a == mean_b {
        return Ok(1.0);
    }
    let ss_within = sum_sq_dev(group_a, mean_a) + sum_sq_dev(group_b, mean_b);
    if ss_within == 0.0 {
        return Ok(0.0);
    }
    let (na_f, nb_f) = (na as f64, nb as f64);
    let diff = mean_a - mean_b;
    let ss_between = na_f * nb_f / (na_f + nb_f) * diff * diff;
    let df_within = (na + nb - 2) as u32;
    let f = ss_between / (ss_within / df_within as f64);
    f_sf(f, 1, df_within)
}

fn sum_sq_dev(samples: &[f64], mean: f64) -> f64 {
    samples.iter().map(|v| (v - mean) * (v - mean)).sum()
}
