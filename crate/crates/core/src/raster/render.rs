//! Rendering of band rasters and index rasters into 8-bit images.

use image::{DynamicImage, GrayAlphaImage, GrayImage, Luma, LumaA, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::satellite::{BandId, BandRaster};

use super::{IndexRaster, RasterError};

pub const DEFAULT_TRUE_COLOR_GAIN: f64 = 2.5;

/// Maps `[0, 1]` to `0..=255`, rounding half up. Inputs are clamped first.
pub fn quantize_unit(x: f64) -> u8 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    (x * 255.0 + 0.5).floor() as u8
}

fn expect_band(raster: &BandRaster, band: BandId) -> Result<(), RasterError> {
    if raster.band() == band {
        Ok(())
    } else {
        Err(RasterError::WrongBand {
            expected: band,
            found: raster.band(),
        })
    }
}

fn dims_u32(w: usize, h: usize) -> (u32, u32) {
    (
        u32::try_from(w).expect("raster width exceeds u32"),
        u32::try_from(h).expect("raster height exceeds u32"),
    )
}

/// True-color composite from B04/B03/B02 with a linear gain and a hard clamp.
/// Pixels masked in any input are black.
pub fn compose_true_color(
    red: &BandRaster,
    green: &BandRaster,
    blue: &BandRaster,
    gain: f64,
) -> Result<RgbImage, RasterError> {
    expect_band(red, BandId::B04)?;
    expect_band(green, BandId::B03)?;
    expect_band(blue, BandId::B02)?;
    for other in [green, blue] {
        if other.dimensions() != red.dimensions() {
            return Err(RasterError::GeometryMismatch {
                left: red.dimensions(),
                right: other.dimensions(),
            });
        }
    }
    let (w, h) = dims_u32(red.width(), red.height());
    let mut out = RgbImage::new(w, h);
    for (i, px) in out.pixels_mut().enumerate() {
        if red.is_valid(i) && green.is_valid(i) && blue.is_valid(i) {
            *px = Rgb([
                quantize_unit(gain * red.values()[i]),
                quantize_unit(gain * green.values()[i]),
                quantize_unit(gain * blue.values()[i]),
            ]);
        }
    }
    Ok(out)
}

/// Moisture color for one index value: red at -1, white at 0, blue at +1.
pub fn moisture_color(index: f64) -> Rgb<u8> {
    if index < 0.0 {
        let c = quantize_unit(index + 1.0);
        Rgb([255, c, c])
    } else {
        let c = quantize_unit(1.0 - index);
        Rgb([c, c, 255])
    }
}

/// Diverging red→white→blue rendering; no-data pixels are black.
pub fn render_moisture(idx: &IndexRaster) -> RgbImage {
    let (w, h) = dims_u32(idx.width(), idx.height());
    let mut out = RgbImage::new(w, h);
    for (px, v) in out.pixels_mut().zip(idx.iter()) {
        if let Some(v) = v {
            *px = moisture_color(v);
        }
    }
    out
}

/// Greyscale polarity of the water rendering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaterPolarity {
    /// Water (index near 1) white, land black.
    #[default]
    WaterWhite,
    /// The Copernicus browser ramp: index 0 white, index 1 black. Quantized
    /// as the 8-bit complement of `WaterWhite` so the two invert exactly.
    BrowserRamp,
}

/// Luminance for one water-index sample. Values outside `[0, 1]` and
/// no-data are discarded to 0 under either polarity.
pub fn water_luminance(index: Option<f64>, polarity: WaterPolarity) -> u8 {
    match index {
        Some(v) if (0.0..=1.0).contains(&v) => match polarity {
            WaterPolarity::WaterWhite => quantize_unit(v),
            WaterPolarity::BrowserRamp => 255 - quantize_unit(v),
        },
        _ => 0,
    }
}

pub fn render_water(idx: &IndexRaster, polarity: WaterPolarity) -> GrayImage {
    let (w, h) = dims_u32(idx.width(), idx.height());
    let mut out = GrayImage::new(w, h);
    for (px, v) in out.pixels_mut().zip(idx.iter()) {
        *px = Luma([water_luminance(v, polarity)]);
    }
    out
}

/// Browser-style download: ramp luminance, with out-of-range and no-data
/// pixels fully transparent.
pub fn render_water_browser(idx: &IndexRaster) -> GrayAlphaImage {
    let (w, h) = dims_u32(idx.width(), idx.height());
    let mut out = GrayAlphaImage::new(w, h);
    for (px, v) in out.pixels_mut().zip(idx.iter()) {
        let shown = v.is_some_and(|v| (0.0..=1.0).contains(&v));
        *px = LumaA([
            water_luminance(v, WaterPolarity::BrowserRamp),
            if shown { 255 } else { 0 },
        ]);
    }
    out
}

/// Greyscale water map from a manually downloaded image. Transparent pixels
/// count as land (0); with `invert` the remaining pixels are flipped, which
/// turns a browser-ramp map into the water-white convention.
pub fn water_from_manual(img: &DynamicImage, invert: bool) -> GrayImage {
    let la = img.to_luma_alpha8();
    let mut out = GrayImage::new(la.width(), la.height());
    for (dst, src) in out.pixels_mut().zip(la.pixels()) {
        let LumaA([l, a]) = *src;
        dst.0[0] = match (a, invert) {
            (0, _) => 0,
            (_, true) => 255 - l,
            (_, false) => l,
        };
    }
    out
}

/// Flips a greyscale image (`255 - v`); converts browser-ramp water maps
/// into the water-white convention.
pub fn invert_gray(img: &GrayImage) -> GrayImage {
    let mut out = img.clone();
    image::imageops::invert(&mut out);
    out
}
