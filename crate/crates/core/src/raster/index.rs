use crate::satellite::BandRaster;

use super::RasterError;

/// Per-pixel normalized-difference index with a validity flag.
///
/// Invalid pixels carry `NaN` in `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexRaster {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl IndexRaster {
    /// Builds a raster from optional samples; `None` marks no-data.
    /// Valid samples must lie in `[-1, 1]`.
    pub fn from_samples(
        width: usize,
        height: usize,
        samples: &[Option<f64>],
    ) -> Result<Self, RasterError> {
        if samples.len() != width * height {
            return Err(RasterError::GeometryMismatch {
                left: (width, height),
                right: (samples.len(), 1),
            });
        }
        let mut values = Vec::with_capacity(samples.len());
        let mut valid = Vec::with_capacity(samples.len());
        for s in samples {
            match s {
                Some(v) if (-1.0..=1.0).contains(v) => {
                    values.push(*v);
                    valid.push(true);
                }
                Some(v) => return Err(RasterError::IndexOutOfRange(*v)),
                None => {
                    values.push(f64::NAN);
                    valid.push(false);
                }
            }
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.valid[index].then(|| self.values[index])
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.values.len()).map(|i| self.get(i))
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }
}

/// `(a - b) / (a + b)` per pixel.
///
/// A pixel is no-data when either band is masked there or when `a + b == 0`.
pub fn normalized_difference(a: &BandRaster, b: &BandRaster) -> Result<IndexRaster, RasterError> {
    if a.dimensions() != b.dimensions() {
        return Err(RasterError::GeometryMismatch {
            left: a.dimensions(),
            right: b.dimensions(),
        });
    }
    let n = a.values().len();
    let mut values = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y) = (a.values()[i], b.values()[i]);
        let sum = x + y;
        if a.is_valid(i) && b.is_valid(i) && sum != 0.0 {
            values.push((x - y) / sum);
            valid.push(true);
        } else {
            values.push(f64::NAN);
            valid.push(false);
        }
    }
    Ok(IndexRaster {
        width: a.width(),
        height: a.height(),
        values,
        valid,
    })
}
