//! Locally adaptive discriminant analysis (LADA) for supervised
//! segmentation of gray-level images, with per-pixel p-value maps and
//! boundary-curve uncertainty bands.

pub mod boundary;
pub mod cli;
pub mod config;
pub mod engine;
pub mod neighborhood;
pub mod phantom;
pub mod raster;
pub mod stats;
