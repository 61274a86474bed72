//! Boundary extraction from a label map, geometric fits, and p-value
//! uncertainty bands around the fitted curves.

mod band;
mod fit;
mod logistic;

pub use band::{uncertainty_band, RadialInterval, UncertaintyBand};
pub use fit::{fit_circle, fit_line, CircleModel, LineModel};
pub use logistic::{fit_logistic, LogisticModel};

use crate::raster::LabelMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("logistic fit did not converge after {iterations} iterations (SSE trace {trace:?})")]
    NoConvergence { iterations: usize, trace: Vec<f64> },
}

/// Interface pixels between two classes, `class_a < class_b`.
///
/// Both sides of the interface are included: a pixel labeled `class_a` with
/// a 4-neighbor labeled `class_b`, and vice versa. Points are in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySet {
    pub class_a: u32,
    pub class_b: u32,
    pub points: Vec<(usize, usize)>,
}

/// All class interfaces of `labels`, sorted by class pair.
pub fn boundary_pixels(labels: &LabelMap, ignore_bonus: bool) -> Vec<BoundarySet> {
    let (w, h) = (labels.width(), labels.height());
    let bonus = labels.bonus_label();
    let mut sets: std::collections::BTreeMap<(u32, u32), Vec<(usize, usize)>> = Default::default();
    for r in 0..h {
        for c in 0..w {
            let own = labels.get(r, c);
            if ignore_bonus && own == bonus {
                continue;
            }
            let mut partners: [u32; 4] = [0; 4];
            let mut n = 0;
            let neighbors = [
                (r.wrapping_sub(1), c),
                (r, c.wrapping_sub(1)),
                (r, c + 1),
                (r + 1, c),
            ];
            for (nr, nc) in neighbors {
                if nr >= h || nc >= w {
                    continue;
                }
                let other = labels.get(nr, nc);
                if other == own || (ignore_bonus && other == bonus) || partners[..n].contains(&other) {
                    continue;
                }
                partners[n] = other;
                n += 1;
            }
            for &other in &partners[..n] {
                let key = (own.min(other), own.max(other));
                sets.entry(key).or_default().push((r, c));
            }
        }
    }
    sets.into_iter()
        .map(|((class_a, class_b), points)| BoundarySet {
            class_a,
            class_b,
            points,
        })
        .collect()
}

/// A fitted boundary curve in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryModel {
    Line(LineModel),
    Logistic(LogisticModel),
    Circle(CircleModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Line,
    Logistic,
    Circle,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" => Ok(Self::Line),
            "logistic" => Ok(Self::Logistic),
            "circle" => Ok(Self::Circle),
            other => Err(format!("unknown boundary model {other:?} (line|logistic|circle)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Line => "line",
            Self::Logistic => "logistic",
            Self::Circle => "circle",
        })
    }
}

impl BoundaryModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Line(_) => ModelKind::Line,
            Self::Logistic(_) => ModelKind::Logistic,
            Self::Circle(_) => ModelKind::Circle,
        }
    }

    /// Euclidean distance from pixel center `(row, col)` to the curve, if it
    /// is at most `limit`.
    pub fn distance_within(&self, row: f64, col: f64, limit: f64) -> Option<f64> {
        let d = match self {
            Self::Line(m) => m.distance(row, col),
            Self::Circle(m) => m.distance(row, col),
            Self::Logistic(m) => m.distance_within(row, col, limit)?,
        };
        (d <= limit).then_some(d)
    }

    /// Fit parameters in a stable order (see [`BoundaryModel::parameter_names`]).
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            Self::Line(m) => vec![m.slope, m.intercept],
            Self::Logistic(m) => vec![m.low, m.high, m.rate, m.midpoint],
            Self::Circle(m) => vec![m.center.0, m.center.1, m.radius],
        }
    }

    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            Self::Line(_) => &["slope", "intercept"],
            Self::Logistic(_) => &["low", "high", "rate", "midpoint"],
            Self::Circle(_) => &["center_row", "center_col", "radius"],
        }
    }

    /// RMS residual of `points` (vertical for line/logistic, radial for circle).
    pub fn rms_residual(&self, points: &[(usize, usize)]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let ss: f64 = points
            .iter()
            .map(|&(r, c)| {
                let (r, c) = (r as f64, c as f64);
                let e = match self {
                    Self::Line(m) => r - m.row_at(c),
                    Self::Logistic(m) => r - m.row_at(c),
                    Self::Circle(m) => m.distance(r, c),
                };
                e * e
            })
            .sum();
        (ss / points.len() as f64).sqrt()
    }
}

/// Fits the requested model kind to boundary points given as `(row, col)`.
pub fn fit_model(kind: ModelKind, points: &[(usize, usize)]) -> Result<BoundaryModel, FitError> {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(r, c)| (r as f64, c as f64)).collect();
    Ok(match kind {
        ModelKind::Line => BoundaryModel::Line(fit_line(&pts)?),
        ModelKind::Logistic => BoundaryModel::Logistic(fit_logistic(&pts)?.model),
        ModelKind::Circle => BoundaryModel::Circle(fit_circle(&pts)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_map_has_no_boundary() {
        let labels = LabelMap::new(5, 5, vec![1; 25], 2).unwrap();
        assert!(boundary_pixels(&labels, true).is_empty());
    }

    #[test]
    fn two_bands() {
        let labels = LabelMap::new(4, 4, (0..16).map(|i| if i < 8 { 1 } else { 2 }).collect(), 2).unwrap();
        let sets = boundary_pixels(&labels, true);
        assert_eq!(sets.len(), 1);
        assert_eq!((sets[0].class_a, sets[0].class_b), (1, 2));
        assert_eq!(sets[0].points.len(), 8);
        assert!(sets[0].points.iter().all(|&(r, _)| r == 1 || r == 2));
    }

    #[test]
    fn bonus_can_be_ignored() {
        let labels = LabelMap::new(3, 1, vec![1, 3, 2], 2).unwrap();
        assert!(boundary_pixels(&labels, true).is_empty());
        let sets = boundary_pixels(&labels, false);
        let pairs: Vec<_> = sets.iter().map(|s| (s.class_a, s.class_b)).collect();
        assert_eq!(pairs, vec![(1, 3), (2, 3)]);
    }

    #[test]
    fn disk_perimeter_matches_scan() {
        let (w, h) = (31usize, 29usize);
        let inside = |r: usize, c: usize| {
            let (dr, dc) = (r as f64 - 14.2, c as f64 - 15.7);
            dr * dr + dc * dc <= 81.0
        };
        let labels: Vec<u32> = (0..w * h).map(|i| if inside(i / w, i % w) { 2 } else { 1 }).collect();
        let map = LabelMap::new(w, h, labels, 2).unwrap();
        // Brute-force: any 4-neighbor on the other side of the disk edge.
        let mut expected = 0;
        for r in 0..h {
            for c in 0..w {
                let own = inside(r, c);
                let nbrs = [(r as i64 - 1, c as i64), (r as i64 + 1, c as i64), (r as i64, c as i64 - 1), (r as i64, c as i64 + 1)];
                if nbrs.iter().any(|&(nr, nc)| {
                    nr >= 0 && nc >= 0 && (nr as usize) < h && (nc as usize) < w && inside(nr as usize, nc as usize) != own
                }) {
                    expected += 1;
                }
            }
        }
        let sets = boundary_pixels(&map, true);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].points.len(), expected);
        for &(r, c) in &sets[0].points {
            let own = map.get(r, c);
            let partner = if own == 1 { 2 } else { 1 };
            let has = [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)]
                .iter()
                .any(|&(nr, nc)| nr < h && nc < w && map.get(nr, nc) == partner);
            assert!(has);
        }
    }

    #[test]
    fn model_kind_parsing() {
        assert_eq!("Circle".parse::<ModelKind>().unwrap(), ModelKind::Circle);
        assert!("spline".parse::<ModelKind>().is_err());
    }
}
