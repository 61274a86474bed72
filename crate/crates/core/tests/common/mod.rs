//! Independent oracles and random instance generators shared by the
//! integration suites. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use lada::raster::{ClassMask, GrayImage};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Standard normal density.
pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `int_0^z phi` by composite Simpson with `panels` (even) subintervals.
pub fn simpson_phi(z: f64, panels: usize) -> f64 {
    let h = z / panels as f64;
    let mut sum = phi(0.0) + phi(z);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * phi(i as f64 * h);
    }
    sum * h / 3.0
}

/// Normal CDF as `1/2 + int_0^z phi`, Simpson step about 1e-3.
pub fn normal_cdf_oracle(z: f64) -> f64 {
    let panels = ((z.abs() / 1e-3).ceil() as usize).max(2);
    let panels = panels + panels % 2;
    0.5 + simpson_phi(z, panels)
}

/// `I_x(a, b)` from the hypergeometric series
/// `x^a (1-x)^b / (a B(a,b)) * sum_k prod_{j<k} (a+b+j)/(a+1+j) x`,
/// reflected to `1 - I_{1-x}(b, a)` above `x = 1/2`.
pub fn beta_series_oracle(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > 0.5 {
        return 1.0 - beta_series_oracle(b, a, 1.0 - x);
    }
    let ln_pre = a * x.ln() + b * (1.0 - x).ln() - a.ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 0.0;
    while j < 1e6 {
        term *= (a + b + j) / (a + 1.0 + j) * x;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        j += 1.0;
    }
    (ln_pre.exp() * sum).clamp(0.0, 1.0)
}

/// Two-sided Student-t tail `P(|T| > t)` for integer `nu` from the
/// closed-form finite sums in `theta = atan(t / sqrt(nu))`.
pub fn student_two_sided(t: f64, nu: u32) -> f64 {
    let theta = (t.abs() / (nu as f64).sqrt()).atan();
    let (s, c) = (theta.sin(), theta.cos());
    let inside = if nu % 2 == 1 {
        let mut acc = 0.0;
        if nu > 1 {
            let mut term = c;
            acc = term;
            let mut k = 1;
            while 2 * k + 1 < nu {
                term *= (2 * k) as f64 / (2 * k + 1) as f64 * c * c;
                acc += term;
                k += 1;
            }
        }
        2.0 / std::f64::consts::PI * (theta + s * acc)
    } else {
        let mut term = 1.0;
        let mut acc = 1.0;
        let mut k = 1;
        while 2 * k < nu {
            term *= (2 * k - 1) as f64 / (2 * k) as f64 * c * c;
            acc += term;
            k += 1;
        }
        s * acc
    };
    (1.0 - inside).clamp(0.0, 1.0)
}

/// Pooled-variance two-sample t-test, two-sided p-value.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    let (ma, mb) = (mean(a), mean(b));
    let nu = (a.len() + b.len() - 2) as u32;
    let sp2 = (ss(a, ma) + ss(b, mb)) / nu as f64;
    let se = (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    student_two_sided((ma - mb) / se, nu)
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub struct Instance {
    pub image: GrayImage,
    pub mask: ClassMask,
    /// Generating class of every pixel.
    pub truth: Vec<u32>,
    pub classes: u32,
}

/// Voronoi-shaped classes with distinct means, a horizontal gradient and
/// Gaussian noise. Each pixel is labeled with its class with probability
/// `coverage`; every class keeps at least one training pixel.
pub fn random_instance<R: Rng>(rng: &mut R, width: usize, height: usize, classes: u32, coverage: f64) -> Instance {
    let seeds: Vec<(f64, f64, u32)> = (0..classes * 2)
        .map(|i| {
            (
                rng.gen_range(0.0..height as f64),
                rng.gen_range(0.0..width as f64),
                i % classes + 1,
            )
        })
        .collect();
    let means: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.0..100.0)).collect();
    let sigmas: Vec<f64> = (0..classes).map(|_| rng.gen_range(1.0..15.0)).collect();
    let slope = rng.gen_range(-0.5..0.5);
    let mut truth = Vec::with_capacity(width * height);
    let mut data = Vec::with_capacity(width * height);
    let mut mask = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let class = seeds
                .iter()
                .min_by(|a, b| {
                    let da = (a.0 - r as f64).powi(2) + (a.1 - c as f64).powi(2);
                    let db = (b.0 - r as f64).powi(2) + (b.1 - c as f64).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap()
                .2;
            let k = class as usize - 1;
            truth.push(class);
            data.push(means[k] + slope * c as f64 + sigmas[k] * gauss(rng));
            mask.push(if rng.gen_bool(coverage) { class } else { 0 });
        }
    }
    for class in 1..=classes {
        if !mask.contains(&class) {
            let idx = rng.gen_range(0..mask.len());
            mask[idx] = class;
        }
    }
    Instance {
        image: GrayImage::new(width, height, data).unwrap(),
        mask: ClassMask::with_class_count(width, height, mask, classes).unwrap(),
        truth,
        classes,
    }
}

/// Per class (index `class - 1`), the coordinates of the first `n`
/// training pixels within distance `d` of `center`, nearest first, ties
/// broken top-to-bottom then left-to-right. Brute-force over the mask.
pub fn brute_local_sets(mask: &ClassMask, center: (usize, usize), d: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut hits: Vec<(i64, i64, i64, usize, usize, u32)> = Vec::new();
    for r in 0..mask.height() {
        for c in 0..mask.width() {
            let label = mask.get(r, c);
            if label == 0 {
                continue;
            }
            let dr = r as i64 - center.0 as i64;
            let dc = c as i64 - center.1 as i64;
            let d2 = dr * dr + dc * dc;
            if d2 <= (d * d) as i64 {
                hits.push((d2, dr, dc, r, c, label));
            }
        }
    }
    hits.sort();
    let mut sets = vec![Vec::new(); mask.class_count() as usize];
    for (_, _, _, r, c, label) in hits {
        let set = &mut sets[label as usize - 1];
        if set.len() < n {
            set.push((r, c));
        }
    }
    sets
}

/// Number of training pixels of each class within distance `d`.
pub fn brute_counts(mask: &ClassMask, center: (usize, usize), d: usize) -> Vec<usize> {
    let mut counts = vec![0; mask.class_count() as usize];
    for r in 0..mask.height() {
        for c in 0..mask.width() {
            let label = mask.get(r, c);
            let dr = r as i64 - center.0 as i64;
            let dc = c as i64 - center.1 as i64;
            if label > 0 && dr * dr + dc * dc <= (d * d) as i64 {
                counts[label as usize - 1] += 1;
            }
        }
    }
    counts
}

pub fn accuracy(labels: &[u32], truth: &[u32]) -> f64 {
    labels.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64
}
