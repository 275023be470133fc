use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};

use crate::raster::water_from_manual;

use super::{ImageSet, ImageSource, SatelliteError, MOISTURE_FILE, RGB_FILE, WATER_FILE};

/// `<root>/<location>`; the location string is used byte-for-byte.
pub fn manual_dir(root: &Path, location: &str) -> PathBuf {
    root.join(location)
}

fn read(path: &Path) -> Result<image::DynamicImage, SatelliteError> {
    image::open(path).map_err(|e| SatelliteError::UnreadableImage {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Loads `rgb.png`, `moisture.png` and `water.png` from `<root>/<location>/`.
///
/// Returns `Ok(None)` when that directory does not exist, and
/// [`SatelliteError::IncompleteManualSet`] when it exists but lacks any of
/// the three files. `invert_water` flips browser-ramp water maps
/// (0 = white) into the water-white convention.
pub fn load_manual_images(
    root: &Path,
    location: &str,
    max_side: u32,
    invert_water: bool,
) -> Result<Option<ImageSet>, SatelliteError> {
    let dir = manual_dir(root, location);
    if !dir.is_dir() {
        return Ok(None);
    }
    let missing: Vec<String> = [RGB_FILE, MOISTURE_FILE, WATER_FILE]
        .into_iter()
        .filter(|f| !dir.join(f).is_file())
        .map(str::to_owned)
        .collect();
    if !missing.is_empty() {
        return Err(SatelliteError::IncompleteManualSet { dir, missing });
    }
    let rgb: RgbImage = read(&dir.join(RGB_FILE))?.to_rgb8();
    let moisture: RgbImage = read(&dir.join(MOISTURE_FILE))?.to_rgb8();
    let water: GrayImage = water_from_manual(&read(&dir.join(WATER_FILE))?, invert_water);
    Ok(Some(ImageSet::new(
        rgb,
        moisture,
        water,
        ImageSource::Manual,
        location,
        max_side,
    )))
}
