//! Raster containers shared by every stage of the pipeline.
//!
//! All containers are row-major and immutable once built. Pixel coordinates
//! are `(row, col)` with row 0 at the top of the image.

mod float_map;
mod pgm;

pub use float_map::{parse_float_map, visualize_float_map, write_float_map};
pub use pgm::{read_gray, read_mask, read_pgm, write_pgm, Pgm, PgmMode, ToPgm};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("format error: {0}")]
    Format(String),
    #[error("length error: expected {expected} samples, found {found}")]
    Length { expected: usize, found: usize },
    #[error("range error: value {value} exceeds maxval {maxval}")]
    Range { value: f64, maxval: u32 },
    #[error("invalid raster: {0}")]
    Invalid(String),
}

/// Grayscale intensities, kept as raw reals.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(RasterError::Invalid(format!(
                "non-finite intensity at index {pos}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self, RasterError> {
        let data = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// `(min, max)` of the intensities.
    pub fn range(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Min-max rescaling onto [0, 1]. A constant image maps to all zeros.
    pub fn normalized(&self) -> Self {
        let (lo, hi) = self.range();
        let span = hi - lo;
        let data = self
            .data
            .iter()
            .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Adds `offset` to every intensity.
    pub fn shifted(&self, offset: f64) -> Result<Self, RasterError> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|v| v + offset).collect(),
        )
    }
}

/// Per-pixel training labels: 0 is unlabeled, `1..=class_count` are classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMask {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    class_count: u32,
}

impl ClassMask {
    /// Builds a mask whose class count is the largest label present.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self, RasterError> {
        let max = labels.iter().copied().max().unwrap_or(0);
        Self::with_class_count(width, height, labels, max)
    }

    /// Builds a mask with a declared class count, which must cover every label.
    pub fn with_class_count(
        width: usize,
        height: usize,
        labels: Vec<u32>,
        class_count: u32,
    ) -> Result<Self, RasterError> {
        check_dims(width, height, labels.len())?;
        if let Some(&bad) = labels.iter().find(|&&l| l > class_count) {
            return Err(RasterError::Invalid(format!(
                "label {bad} exceeds declared class count {class_count}"
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            class_count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_count(&self) -> u32 {
        self.class_count
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Number of training pixels per class, indexed by class id (index 0 is unlabeled).
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.class_count as usize + 1];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn labeled_fraction(&self) -> f64 {
        let labeled = self.labels.iter().filter(|&&l| l > 0).count();
        labeled as f64 / self.labels.len() as f64
    }
}

/// Segmentation output. Labels lie in `1..=class_count + 1`; the last value is the bonus class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    class_count: u32,
}

impl LabelMap {
    pub fn new(
        width: usize,
        height: usize,
        labels: Vec<u32>,
        class_count: u32,
    ) -> Result<Self, RasterError> {
        check_dims(width, height, labels.len())?;
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > class_count + 1) {
            return Err(RasterError::Invalid(format!(
                "label {bad} outside 1..={}",
                class_count + 1
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            class_count,
        })
    }

    /// Reinterprets a label raster read from disk (e.g. `labels.pgm`).
    pub fn from_mask(mask: &ClassMask, class_count: u32) -> Result<Self, RasterError> {
        Self::new(
            mask.width(),
            mask.height(),
            mask.labels().to_vec(),
            class_count,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_count(&self) -> u32 {
        self.class_count
    }

    pub fn bonus_label(&self) -> u32 {
        self.class_count + 1
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }
}

/// Real-valued per-pixel map (p-values). `None` is the UNDEFINED sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    values: Vec<Option<f64>>,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize, values: Vec<Option<f64>>) -> Result<Self, RasterError> {
        check_dims(width, height, values.len())?;
        if let Some(v) = values.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(RasterError::Invalid(format!("map value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.width + col]
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::Invalid(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width * height != len {
        return Err(RasterError::Length {
            expected: width * height,
            found: len,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_rejects_non_finite() {
        assert!(GrayImage::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn gray_rejects_bad_length() {
        assert_eq!(
            GrayImage::new(2, 2, vec![0.0; 3]),
            Err(RasterError::Length {
                expected: 4,
                found: 3
            })
        );
    }

    #[test]
    fn mask_class_count_covers_labels() {
        let m = ClassMask::new(3, 1, vec![0, 2, 1]).unwrap();
        assert_eq!(m.class_count(), 2);
        assert_eq!(m.class_sizes(), vec![1, 1, 1]);
        assert!(ClassMask::with_class_count(3, 1, vec![0, 5, 1], 4).is_err());
        assert_eq!(
            ClassMask::with_class_count(3, 1, vec![0, 2, 1], 4)
                .unwrap()
                .class_count(),
            4
        );
    }

    #[test]
    fn label_map_bounds() {
        assert!(LabelMap::new(2, 1, vec![1, 3], 2).is_ok());
        assert!(LabelMap::new(2, 1, vec![0, 1], 2).is_err());
        assert!(LabelMap::new(2, 1, vec![1, 4], 2).is_err());
    }

    #[test]
    fn scalar_map_range() {
        assert!(ScalarMap::new(2, 1, vec![Some(0.5), None]).is_ok());
        assert!(ScalarMap::new(2, 1, vec![Some(1.5), None]).is_err());
    }

    #[test]
    fn normalization() {
        let img = GrayImage::new(3, 1, vec![10.0, 20.0, 30.0]).unwrap();
        assert_eq!(img.normalized().data(), &[0.0, 0.5, 1.0]);
        let flat = GrayImage::new(2, 1, vec![4.0, 4.0]).unwrap();
        assert_eq!(flat.normalized().data(), &[0.0, 0.0]);
    }
}
