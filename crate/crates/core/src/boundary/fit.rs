//! Closed-form line and circle fits.
//!
//! Points are `(row, col)` pairs in pixel coordinates.

use super::FitError;

/// `row = slope * col + intercept`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineModel {
    pub slope: f64,
    pub intercept: f64,
}

impl LineModel {
    pub fn row_at(&self, col: f64) -> f64 {
        self.slope * col + self.intercept
    }

    /// Perpendicular distance from `(row, col)`.
    pub fn distance(&self, row: f64, col: f64) -> f64 {
        (self.row_at(col) - row).abs() / (1.0 + self.slope * self.slope).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleModel {
    /// `(row, col)`
    pub center: (f64, f64),
    pub radius: f64,
}

impl CircleModel {
    /// Unsigned radial distance from `(row, col)` to the circle.
    pub fn distance(&self, row: f64, col: f64) -> f64 {
        (self.radial(row, col) - self.radius).abs()
    }

    /// Distance from `(row, col)` to the center.
    pub fn radial(&self, row: f64, col: f64) -> f64 {
        (row - self.center.0).hypot(col - self.center.1)
    }
}

/// Ordinary least squares of row on col.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LineModel, FitError> {
    if points.len() < 2 {
        return Err(FitError::Argument(format!(
            "line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_c = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_r = points.iter().map(|p| p.0).sum::<f64>() / n;
    let (mut scc, mut scr) = (0.0, 0.0);
    for &(r, c) in points {
        scc += (c - mean_c) * (c - mean_c);
        scr += (c - mean_c) * (r - mean_r);
    }
    if scc == 0.0 {
        return Err(FitError::Degenerate(
            "all points share one column (vertical boundary); fit with rows and columns swapped".into(),
        ));
    }
    let slope = scr / scc;
    Ok(LineModel {
        slope,
        intercept: mean_r - slope * mean_c,
    })
}

/// Algebraic (Kasa) circle fit: least squares on
/// `x^2 + y^2 + D x + E y + F = 0`, solved on centered coordinates.
pub fn fit_circle(points: &[(f64, f64)]) -> Result<CircleModel, FitError> {
    if points.len() < 3 {
        return Err(FitError::Argument(format!(
            "circle fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mr = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mc = points.iter().map(|p| p.1).sum::<f64>() / n;
    // Normal equations for u, v (centered) minimizing sum (u^2+v^2 + D u + E v + F)^2.
    let (mut suu, mut suv, mut svv) = (0.0, 0.0, 0.0);
    let (mut suz, mut svz, mut sz) = (0.0, 0.0, 0.0);
    for &(r, c) in points {
        let (u, v) = (r - mr, c - mc);
        let z = u * u + v * v;
        suu += u * u;
        suv += u * v;
        svv += v * v;
        suz += u * z;
        svz += v * z;
        sz += z;
    }
    // With centered data sum u = sum v = 0, so F decouples: F = -mean(z).
    let det = suu * svv - suv * suv;
    let scale = (suu + svv).powi(2);
    if scale == 0.0 || det.abs() <= 1e-12 * scale {
        return Err(FitError::Degenerate("points are collinear".into()));
    }
    let d = -(suz * svv - svz * suv) / det;
    let e = -(svz * suu - suz * suv) / det;
    let f = -sz / n;
    let cu = -d / 2.0;
    let cv = -e / 2.0;
    let r2 = cu * cu + cv * cv - f;
    if !(r2 > 0.0) {
        return Err(FitError::Degenerate("non-positive squared radius".into()));
    }
    Ok(CircleModel {
        center: (cu + mr, cv + mc),
        radius: r2.sqrt(),
    })
}
