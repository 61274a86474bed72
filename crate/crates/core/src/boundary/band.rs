//! Uncertainty bands: low p-value pixels near a fitted boundary.

use std::collections::BTreeSet;

use super::{BoundaryModel, FitError};
use crate::raster::ScalarMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialInterval {
    pub r_min: f64,
    pub r_max: f64,
}

impl RadialInterval {
    pub fn contains(&self, r: f64) -> bool {
        self.r_min <= r && r <= self.r_max
    }
}

/// Selected pixels, plus their radial extent for circular boundaries.
/// The band need not be symmetric about the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyBand {
    pub pixels: Vec<(usize, usize)>,
    /// `Some` only for circle models with at least one selected pixel.
    pub radial: Option<RadialInterval>,
}

impl UncertaintyBand {
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Band width in pixels. For a radial band it is `r_max - r_min`; for
    /// a pixel band it is the mean thickness, pixel count divided by the
    /// number of distinct positions along the boundary (columns, or rows
    /// for boundaries steeper than 45 degrees). Zero when empty.
    pub fn width(&self, model: &BoundaryModel) -> f64 {
        if let Some(r) = self.radial {
            return r.r_max - r.r_min;
        }
        if self.pixels.is_empty() {
            return 0.0;
        }
        let along_rows = matches!(model, BoundaryModel::Line(m) if m.slope.abs() > 1.0)
            || matches!(model, BoundaryModel::Logistic(m) if m.rate.abs() * (m.high - m.low).abs() / 4.0 > 1.0);
        let positions: BTreeSet<usize> = self
            .pixels
            .iter()
            .map(|&(r, c)| if along_rows { r } else { c })
            .collect();
        self.pixels.len() as f64 / positions.len() as f64
    }
}

/// Pixels with a defined p-value below `alpha` lying within `proximity`
/// pixels of the model curve. For circles the band also carries the
/// `[min, max]` distance of those pixels from the fitted center.
pub fn uncertainty_band(
    pmap: &ScalarMap,
    model: &BoundaryModel,
    alpha: f64,
    proximity: f64,
) -> Result<UncertaintyBand, FitError> {
    if !(proximity > 0.0) {
        return Err(FitError::Argument(format!("proximity must be > 0, got {proximity}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(FitError::Argument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let mut pixels = Vec::new();
    for r in 0..pmap.height() {
        for c in 0..pmap.width() {
            let Some(p) = pmap.get(r, c) else { continue };
            if p >= alpha {
                continue;
            }
            if model.distance_within(r as f64, c as f64, proximity).is_some() {
                pixels.push((r, c));
            }
        }
    }
    let radial = match model {
        BoundaryModel::Circle(circle) if !pixels.is_empty() => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(r, c) in &pixels {
                let d = circle.radial(r as f64, c as f64);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            Some(RadialInterval { r_min: lo, r_max: hi })
        }
        _ => None,
    };
    Ok(UncertaintyBand { pixels, radial })
}
