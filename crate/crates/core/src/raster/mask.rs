//! Water-mask thresholding and morphological clean-up.
//!
//! Structuring elements are squares of side `2 * radius + 1`, clipped at the
//! image border: pixels outside the frame neither erode nor dilate anything,
//! so a river leaving the frame is not eaten from its cut edge.

use std::collections::VecDeque;

use image::{GrayImage, Luma};

use super::RasterError;

pub const DEFAULT_THRESHOLD: u8 = 128;
pub const DEFAULT_OPENING_RADIUS: usize = 1;
pub const DEFAULT_MIN_AREA_FRACTION: f64 = 0.0005;
pub const DEFAULT_SIGNIFICANCE_CUTOFF: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if bits.len() != width * height {
            return Err(RasterError::GeometryMismatch {
                left: (width, height),
                right: (bits.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Any nonzero pixel counts as set.
    pub fn from_gray(img: &GrayImage) -> Self {
        threshold_mask(img, 1)
    }

    /// Water white (255) on black (0).
    pub fn to_gray(&self) -> GrayImage {
        let mut img = GrayImage::new(self.width as u32, self.height as u32);
        for (px, &b) in img.pixels_mut().zip(&self.bits) {
            *px = Luma([if b { 255 } else { 0 }]);
        }
        img
    }
}

/// `luminance >= t` marks water.
pub fn threshold_mask(gray: &GrayImage, t: u8) -> BinaryMask {
    let (w, h) = gray.dimensions();
    BinaryMask {
        width: w as usize,
        height: h as usize,
        bits: gray.pixels().map(|p| p.0[0] >= t).collect(),
    }
}

/// One separable pass of a clipped square window over rows or columns.
/// `all` selects erosion (every sample set) vs. dilation (any sample set).
fn window_pass(
    src: &[bool],
    width: usize,
    height: usize,
    radius: usize,
    horizontal: bool,
    all: bool,
) -> Vec<bool> {
    let (lines, len) = if horizontal {
        (height, width)
    } else {
        (width, height)
    };
    let at = |line: usize, k: usize| {
        if horizontal {
            line * width + k
        } else {
            k * width + line
        }
    };
    let mut out = vec![false; src.len()];
    let mut prefix = vec![0usize; len + 1];
    for line in 0..lines {
        for k in 0..len {
            prefix[k + 1] = prefix[k] + usize::from(src[at(line, k)]);
        }
        for k in 0..len {
            let lo = k.saturating_sub(radius);
            let hi = (k + radius).min(len - 1);
            let set = prefix[hi + 1] - prefix[lo];
            out[at(line, k)] = if all { set == hi - lo + 1 } else { set > 0 };
        }
    }
    out
}

fn morph(mask: &BinaryMask, radius: usize, all: bool) -> BinaryMask {
    if radius == 0 || mask.bits.is_empty() {
        return mask.clone();
    }
    let rows = window_pass(&mask.bits, mask.width, mask.height, radius, true, all);
    let bits = window_pass(&rows, mask.width, mask.height, radius, false, all);
    BinaryMask { bits, ..*mask }
}

pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    morph(mask, radius, true)
}

pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    morph(mask, radius, false)
}

pub fn open(mask: &BinaryMask, radius: usize) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

/// 8-connected component labels (0 = background, 1.. = component id) and
/// the area of each component, indexed by `id - 1`.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; mask.bits.len()];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.bits.len() {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        let id = areas.len() as u32 + 1;
        labels[start] = id;
        queue.push_back(start);
        let mut area = 0;
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (x, y) = (i % w, i / w);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if mask.bits[j] && labels[j] == 0 {
                        labels[j] = id;
                        queue.push_back(j);
                    }
                }
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

/// Drops 8-connected components whose pixel count is below
/// `min_area_fraction * width * height`.
pub fn remove_small_components(mask: &BinaryMask, min_area_fraction: f64) -> BinaryMask {
    let total = (mask.width * mask.height) as f64;
    let (labels, areas) = label_components(mask);
    let bits = labels
        .iter()
        .map(|&l| l != 0 && (areas[l as usize - 1] as f64) >= min_area_fraction * total)
        .collect();
    BinaryMask { bits, ..*mask }
}

/// Opening followed by the small-component filter.
pub fn denoise_mask(
    mask: &BinaryMask,
    opening_radius: usize,
    min_area_fraction: f64,
) -> Result<BinaryMask, RasterError> {
    if !(0.0..1.0).contains(&min_area_fraction) {
        return Err(RasterError::InvalidParameter(format!(
            "min_area_fraction must be in [0, 1), got {min_area_fraction}"
        )));
    }
    Ok(remove_small_components(
        &open(mask, opening_radius),
        min_area_fraction,
    ))
}

pub fn water_fraction(mask: &BinaryMask) -> f64 {
    if mask.bits.is_empty() {
        return 0.0;
    }
    mask.count() as f64 / mask.bits.len() as f64
}
