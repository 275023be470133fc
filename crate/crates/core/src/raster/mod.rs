//! Pixel math: normalized-difference indices, image rendering, the
//! largest-side rescale and water-mask preprocessing.
//!
//! All functions here are pure.

mod index;
mod mask;
mod render;
mod resize;

use thiserror::Error;

use crate::satellite::BandId;

pub use index::{normalized_difference, IndexRaster};
pub use mask::{
    denoise_mask, dilate, erode, label_components, open, remove_small_components, threshold_mask,
    water_fraction, BinaryMask, DEFAULT_MIN_AREA_FRACTION, DEFAULT_OPENING_RADIUS,
    DEFAULT_SIGNIFICANCE_CUTOFF, DEFAULT_THRESHOLD,
};
pub use render::{
    compose_true_color, invert_gray, moisture_color, quantize_unit, render_moisture, render_water,
    render_water_browser, water_from_manual, water_luminance, WaterPolarity,
    DEFAULT_TRUE_COLOR_GAIN,
};
pub use resize::{rescale_max_side, scaled_dimensions, DEFAULT_MAX_SIDE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("geometry mismatch: {left:?} vs {right:?}")]
    GeometryMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("expected band {expected}, found {found}")]
    WrongBand { expected: BandId, found: BandId },
    #[error("index value {0} outside [-1, 1]")]
    IndexOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
