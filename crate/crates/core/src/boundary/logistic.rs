//! Four-parameter logistic boundary fitted by damped Gauss-Newton
//! (Levenberg-Marquardt).

use super::FitError;

const MAX_ITERATIONS: usize = 200;
const REL_TOL: f64 = 1e-10;

/// `row(col) = low + (high - low) / (1 + exp(-rate * (col - midpoint)))`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticModel {
    pub low: f64,
    pub high: f64,
    pub rate: f64,
    pub midpoint: f64,
}

impl LogisticModel {
    fn from_params(p: &[f64; 4]) -> Self {
        Self {
            low: p[0],
            high: p[1],
            rate: p[2],
            midpoint: p[3],
        }
    }

    fn params(&self) -> [f64; 4] {
        [self.low, self.high, self.rate, self.midpoint]
    }

    #[inline]
    fn sigmoid(&self, col: f64) -> f64 {
        1.0 / (1.0 + (-self.rate * (col - self.midpoint)).exp())
    }

    pub fn row_at(&self, col: f64) -> f64 {
        self.low + (self.high - self.low) * self.sigmoid(col)
    }

    /// Euclidean distance from `(row, col)` to the curve when it is at most
    /// `limit`. The closest curve point must lie within `limit` columns, so
    /// that window is sampled and the best sample refined by golden section.
    pub fn distance_within(&self, row: f64, col: f64, limit: f64) -> Option<f64> {
        let sq = |t: f64| {
            let dr = self.row_at(t) - row;
            (t - col) * (t - col) + dr * dr
        };
        let steps = ((2.0 * limit / 0.0625).ceil() as usize).clamp(16, 4096);
        let h = 2.0 * limit / steps as f64;
        let (mut best_t, mut best) = (col, sq(col));
        for i in 0..=steps {
            let t = col - limit + i as f64 * h;
            let v = sq(t);
            if v < best {
                best = v;
                best_t = t;
            }
        }
        let (mut a, mut b) = (best_t - h, best_t + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if sq(x1) < sq(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let d = best.min(sq(0.5 * (a + b))).sqrt();
        (d <= limit).then_some(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub sse: f64,
    pub iterations: usize,
    /// SSE after every iteration (accepted or not).
    pub trace: Vec<f64>,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sse_of(model: &LogisticModel, points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .map(|&(r, c)| {
            let e = model.row_at(c) - r;
            e * e
        })
        .sum()
}

fn initial_guess(points: &[(f64, f64)]) -> Result<LogisticModel, FitError> {
    let mut rows: Vec<f64> = points.iter().map(|p| p.0).collect();
    rows.sort_by(f64::total_cmp);
    let low = percentile(&rows, 0.05);
    let high = percentile(&rows, 0.95);
    if high - low <= 1e-12 * high.abs().max(low.abs()).max(1.0) {
        return Err(FitError::Degenerate(
            "points lie on a single plateau; a logistic is not identifiable".into(),
        ));
    }
    let mut by_col = points.to_vec();
    by_col.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let cols: Vec<f64> = by_col.iter().map(|p| p.1).collect();
    let midpoint = percentile(&cols, 0.5);
    let span = cols[cols.len() - 1] - cols[0];
    if span <= 0.0 {
        return Err(FitError::Degenerate("all points share one column".into()));
    }
    // Central difference across the interquartile range of columns.
    let (i_lo, i_hi) = (by_col.len() / 4, (3 * by_col.len()) / 4);
    let (lo_pt, hi_pt) = (by_col[i_lo], by_col[i_hi.min(by_col.len() - 1)]);
    let slope = if hi_pt.1 > lo_pt.1 {
        (hi_pt.0 - lo_pt.0) / (hi_pt.1 - lo_pt.1)
    } else {
        (by_col[by_col.len() - 1].0 - by_col[0].0) / span
    };
    let mut rate = 4.0 * slope / (high - low);
    if rate == 0.0 || !rate.is_finite() {
        rate = 4.0 / span;
    }
    Ok(LogisticModel {
        low,
        high,
        rate,
        midpoint,
    })
}

/// Least-squares logistic through `(row, col)` points.
pub fn fit_logistic(points: &[(f64, f64)]) -> Result<LogisticFit, FitError> {
    if points.len() < 4 {
        return Err(FitError::Argument(format!(
            "logistic fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let mut model = initial_guess(points)?;
    let mut sse = sse_of(&model, points);
    let scale: f64 = points.iter().map(|p| p.0 * p.0).sum::<f64>().max(1.0);
    let mut lambda = 1e-3;
    let mut trace = Vec::new();

    for iteration in 1..=MAX_ITERATIONS {
        if sse <= 1e-26 * scale {
            return Ok(LogisticFit {
                model,
                sse,
                iterations: iteration - 1,
                trace,
            });
        }
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        let span = model.high - model.low;
        for &(r, c) in points {
            let s = model.sigmoid(c);
            let ds = s * (1.0 - s);
            let j = [
                1.0 - s,
                s,
                span * ds * (c - model.midpoint),
                -span * ds * model.rate,
            ];
            let res = model.row_at(c) - r;
            for a in 0..4 {
                jtr[a] += j[a] * res;
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut damped = jtj;
        for (k, row) in damped.iter_mut().enumerate() {
            row[k] += lambda * jtj[k][k].max(1e-12);
        }
        let step = solve4(damped, jtr.map(|v| -v));
        let candidate = match step {
            Some(step) => {
                let p = model.params();
                let next = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
                next.iter().all(|v| v.is_finite()).then(|| LogisticModel::from_params(&next))
            }
            None => None,
        };
        let candidate_sse = candidate.map(|m| sse_of(&m, points)).filter(|s| s.is_finite());
        match (candidate, candidate_sse) {
            (Some(next), Some(next_sse)) if next_sse <= sse => {
                let rel = (sse - next_sse) / sse;
                model = next;
                sse = next_sse;
                trace.push(sse);
                lambda = (lambda * 0.1).max(1e-12);
                if rel < REL_TOL {
                    return finish(model, sse, iteration, trace);
                }
            }
            _ => {
                trace.push(sse);
                lambda *= 10.0;
                if lambda > 1e14 {
                    // No descent direction left at any damping: a stationary point.
                    return finish(model, sse, iteration, trace);
                }
            }
        }
    }
    Err(FitError::NoConvergence {
        iterations: MAX_ITERATIONS,
        trace,
    })
}

fn finish(model: LogisticModel, sse: f64, iterations: usize, trace: Vec<f64>) -> Result<LogisticFit, FitError> {
    if model.rate == 0.0 || !model.params().iter().all(|v| v.is_finite()) {
        return Err(FitError::Degenerate(format!("fit ended at invalid parameters {model:?}")));
    }
    Ok(LogisticFit {
        model,
        sse,
        iterations,
        trace,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut m: [[f64; 4]; 4], mut v: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = (row + 1..4).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - tail) / m[row][row];
    }
    Some(x)
}
