use image::imageops::{self, FilterType};
use image::{ImageBuffer, Pixel};

pub const DEFAULT_MAX_SIDE: u32 = 1024;

/// Target size so that the longer side equals `max_side`; the shorter side
/// is rounded half-up and never drops below 1. Sizes already within the
/// limit are returned unchanged.
pub fn scaled_dimensions(width: u32, height: u32, max_side: u32) -> (u32, u32) {
    assert!(max_side >= 1, "max_side must be at least 1");
    let long = width.max(height);
    if long <= max_side {
        return (width, height);
    }
    let short = width.min(height) as u64;
    let (long64, max64) = (long as u64, max_side as u64);
    let scaled = ((2 * short * max64 + long64) / (2 * long64)).max(1) as u32;
    if width >= height {
        (max_side, scaled)
    } else {
        (scaled, max_side)
    }
}

/// Proportional downscale (bilinear) so the largest side is at most `max_side`.
pub fn rescale_max_side<P>(
    img: &ImageBuffer<P, Vec<P::Subpixel>>,
    max_side: u32,
) -> ImageBuffer<P, Vec<P::Subpixel>>
where
    P: Pixel + 'static,
    P::Subpixel: 'static,
{
    let (w, h) = img.dimensions();
    let (nw, nh) = scaled_dimensions(w, h, max_side);
    if (nw, nh) == (w, h) {
        return img.clone();
    }
    imageops::resize(img, nw, nh, FilterType::Triangle)
}
