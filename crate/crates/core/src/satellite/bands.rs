use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The Sentinel-2 bands the pipeline consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BandId {
    B02,
    B03,
    B04,
    B08,
    B8A,
    B11,
}

impl BandId {
    pub const ALL: [BandId; 6] = [
        BandId::B02,
        BandId::B03,
        BandId::B04,
        BandId::B08,
        BandId::B8A,
        BandId::B11,
    ];

    pub fn code(self) -> &'static str {
        match self {
            BandId::B02 => "B02",
            BandId::B03 => "B03",
            BandId::B04 => "B04",
            BandId::B08 => "B08",
            BandId::B8A => "B8A",
            BandId::B11 => "B11",
        }
    }

    /// Central wavelength in nanometers.
    pub fn center_wavelength_nm(self) -> f64 {
        match self {
            BandId::B02 => 492.1,
            BandId::B03 => 559.0,
            BandId::B04 => 665.0,
            BandId::B08 => 833.0,
            BandId::B8A => 864.0,
            BandId::B11 => 1610.0,
        }
    }

    pub fn common_name(self) -> &'static str {
        match self {
            BandId::B02 => "Blue",
            BandId::B03 => "Green",
            BandId::B04 => "Red",
            BandId::B08 => "Near-Infrared",
            BandId::B8A => "Narrow Near-Infrared",
            BandId::B11 => "Short-Wave Infrared",
        }
    }
}

impl fmt::Display for BandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown band code {0:?}")]
pub struct UnknownBand(pub String);

impl FromStr for BandId {
    type Err = UnknownBand;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BandId::ALL
            .into_iter()
            .find(|b| b.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownBand(s.to_owned()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterShapeError {
    #[error("{band}: expected {expected} samples for {width}x{height}, got {values} values and {mask} mask flags")]
    Length {
        band: BandId,
        width: usize,
        height: usize,
        expected: usize,
        values: usize,
        mask: usize,
    },
    #[error("{band}: reflectance must be finite and non-negative, found {value} at index {index}")]
    NegativeReflectance {
        band: BandId,
        index: usize,
        value: f64,
    },
}

/// One spectral band on a row-major grid, with a per-pixel validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRaster {
    band: BandId,
    width: usize,
    height: usize,
    values: Vec<f64>,
    data_mask: Vec<bool>,
}

impl BandRaster {
    /// Masked-out samples are not range-checked.
    pub fn new(
        band: BandId,
        width: usize,
        height: usize,
        values: Vec<f64>,
        data_mask: Vec<bool>,
    ) -> Result<Self, RasterShapeError> {
        let expected = width * height;
        if values.len() != expected || data_mask.len() != expected {
            return Err(RasterShapeError::Length {
                band,
                width,
                height,
                expected,
                values: values.len(),
                mask: data_mask.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|&(i, v)| data_mask[i] && !(v.is_finite() && *v >= 0.0))
        {
            return Err(RasterShapeError::NegativeReflectance { band, index, value });
        }
        Ok(Self {
            band,
            width,
            height,
            values,
            data_mask,
        })
    }

    /// Raster with every pixel valid.
    pub fn fully_valid(
        band: BandId,
        width: usize,
        height: usize,
        values: Vec<f64>,
    ) -> Result<Self, RasterShapeError> {
        let mask = vec![true; values.len()];
        Self::new(band, width, height, values, mask)
    }

    pub fn filled(
        band: BandId,
        width: usize,
        height: usize,
        value: f64,
    ) -> Result<Self, RasterShapeError> {
        Self::fully_valid(band, width, height, vec![value; width * height])
    }

    pub fn band(&self) -> BandId {
        self.band
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn data_mask(&self) -> &[bool] {
        &self.data_mask
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.data_mask[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelengths_match_band_table() {
        let expected = [
            ("B02", 492.1),
            ("B03", 559.0),
            ("B04", 665.0),
            ("B08", 833.0),
            ("B8A", 864.0),
            ("B11", 1610.0),
        ];
        for (code, nm) in expected {
            let b: BandId = code.parse().unwrap();
            assert_eq!(b.code(), code);
            assert_eq!(b.center_wavelength_nm(), nm);
        }
        assert!("B05".parse::<BandId>().is_err());
    }

    #[test]
    fn raster_shape_checked() {
        assert!(BandRaster::new(BandId::B03, 2, 2, vec![0.0; 4], vec![true; 3]).is_err());
        assert!(BandRaster::new(BandId::B03, 2, 2, vec![0.0; 3], vec![true; 4]).is_err());
        assert!(BandRaster::fully_valid(BandId::B03, 1, 1, vec![-0.1]).is_err());
        // masked-out negatives are tolerated
        assert!(BandRaster::new(BandId::B03, 1, 1, vec![-1.0], vec![false]).is_ok());
    }
}
