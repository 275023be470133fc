//! Acquisition of the three input images for a location: manually supplied
//! files win; otherwise scenes are discovered and band rasters fetched from
//! the satellite process API, then rendered.

mod api;
mod bands;
mod manual;
mod scenes;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{bounding_box, GeoError, Geocoder};
use crate::http::HttpTransport;
use crate::raster::{
    compose_true_color, normalized_difference, render_moisture, render_water, rescale_max_side,
    RasterError, WaterPolarity,
};

pub use api::{discover_scenes, fetch_bands, SatelliteApi, COLLECTION};
pub use bands::{BandId, BandRaster, RasterShapeError, UnknownBand};
pub use manual::{load_manual_images, manual_dir};
pub use scenes::{filter_scenes, validate_max_cloud, SceneRef, TimeWindow, DEFAULT_MAX_CLOUD};

pub const RGB_FILE: &str = "rgb.png";
pub const MOISTURE_FILE: &str = "moisture.png";
pub const WATER_FILE: &str = "water.png";

#[derive(Debug, Error)]
pub enum SatelliteError {
    #[error("satellite service unreachable: {0}")]
    ServiceUnreachable(String),
    #[error("malformed satellite response: {0}")]
    MalformedResponse(String),
    #[error("no scene with cloud fraction below {max_cloud} in the time window; consider raising max_cloud")]
    NoEligibleScene { max_cloud: f64 },
    #[error("band {0} unavailable")]
    BandUnavailable(BandId),
    #[error("band geometry mismatch: {first:?} vs {other:?}")]
    GeometryMismatch {
        first: (BandId, (usize, usize)),
        other: (BandId, (usize, usize)),
    },
    #[error("no bands requested")]
    EmptyBandSet,
    #[error("empty time window {start}..{end}")]
    InvalidWindow { start: NaiveDate, end: NaiveDate },
    #[error("max cloud fraction must be in (0, 1], got {0}")]
    InvalidCloudCeiling(f64),
    #[error("manual image set in {dir:?} is incomplete, missing: {}", missing.join(", "))]
    IncompleteManualSet { dir: PathBuf, missing: Vec<String> },
    #[error("cannot read image {path:?}: {message}")]
    UnreadableImage { path: PathBuf, message: String },
    #[error("no manual images and no satellite API token configured")]
    MissingCredentials,
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("cannot write {path:?}: {message}")]
    Write { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageSource {
    Manual,
    Api,
}

/// True-color, moisture and water images for one location, each with its
/// largest side capped.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub rgb: RgbImage,
    pub moisture: RgbImage,
    pub water: GrayImage,
    pub source: ImageSource,
    pub location: String,
}

impl ImageSet {
    pub fn new(
        rgb: RgbImage,
        moisture: RgbImage,
        water: GrayImage,
        source: ImageSource,
        location: &str,
        max_side: u32,
    ) -> Self {
        Self {
            rgb: rescale_max_side(&rgb, max_side),
            moisture: rescale_max_side(&moisture, max_side),
            water: rescale_max_side(&water, max_side),
            source,
            location: location.to_owned(),
        }
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), SatelliteError> {
        std::fs::create_dir_all(dir).map_err(|e| SatelliteError::Write {
            path: dir.to_owned(),
            message: e.to_string(),
        })?;
        let save = |name: &str, res: image::ImageResult<()>| {
            res.map_err(|e| SatelliteError::Write {
                path: dir.join(name),
                message: e.to_string(),
            })
        };
        save(RGB_FILE, self.rgb.save(dir.join(RGB_FILE)))?;
        save(MOISTURE_FILE, self.moisture.save(dir.join(MOISTURE_FILE)))?;
        save(WATER_FILE, self.water.save(dir.join(WATER_FILE)))
    }
}

pub struct RenderedImages {
    pub rgb: RgbImage,
    pub moisture: RgbImage,
    pub water: GrayImage,
}

fn band(bands: &BTreeMap<BandId, BandRaster>, id: BandId) -> Result<&BandRaster, SatelliteError> {
    bands.get(&id).ok_or(SatelliteError::BandUnavailable(id))
}

/// Renders true color (B04/B03/B02), moisture index (B8A vs B11) and water
/// index (B03 vs B08) from a full band set.
pub fn render_bands(
    bands: &BTreeMap<BandId, BandRaster>,
    gain: f64,
    polarity: WaterPolarity,
) -> Result<RenderedImages, SatelliteError> {
    let rgb = compose_true_color(
        band(bands, BandId::B04)?,
        band(bands, BandId::B03)?,
        band(bands, BandId::B02)?,
        gain,
    )?;
    let moisture = render_moisture(&normalized_difference(
        band(bands, BandId::B8A)?,
        band(bands, BandId::B11)?,
    )?);
    let water = render_water(
        &normalized_difference(band(bands, BandId::B03)?, band(bands, BandId::B08)?)?,
        polarity,
    );
    Ok(RenderedImages {
        rgb,
        moisture,
        water,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquireStage {
    ManualImages,
    Configuration,
    Geocoding,
    BoundingBox,
    SceneDiscovery,
    BandFetch,
    Rendering,
}

impl fmt::Display for AcquireStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AcquireStage::ManualImages => "manual images",
            AcquireStage::Configuration => "configuration",
            AcquireStage::Geocoding => "geocoding",
            AcquireStage::BoundingBox => "bounding box",
            AcquireStage::SceneDiscovery => "scene discovery",
            AcquireStage::BandFetch => "band fetch",
            AcquireStage::Rendering => "rendering",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
#[error("satellite acquisition failed at {stage}: {source}")]
pub struct AcquireError {
    pub stage: AcquireStage,
    #[source]
    pub source: SatelliteError,
}

trait AtStage<T> {
    fn at(self, stage: AcquireStage) -> Result<T, AcquireError>;
}

impl<T, E: Into<SatelliteError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: AcquireStage) -> Result<T, AcquireError> {
        self.map_err(|e| AcquireError {
            stage,
            source: e.into(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct AcquireConfig {
    pub manual_root: PathBuf,
    pub geocoder_url: String,
    pub satellite_api_url: String,
    pub api_token: Option<String>,
    pub bbox_side_m: f64,
    pub max_cloud: f64,
    pub max_side: u32,
    pub true_color_gain: f64,
    pub invert_manual_water: bool,
    pub today: NaiveDate,
}

/// Manual images if present, otherwise geocode → box → newest eligible
/// scene → band fetch → render.
pub fn acquire(
    location: &str,
    config: &AcquireConfig,
    transport: Arc<dyn HttpTransport>,
) -> Result<ImageSet, AcquireError> {
    if let Some(set) = load_manual_images(
        &config.manual_root,
        location,
        config.max_side,
        config.invert_manual_water,
    )
    .at(AcquireStage::ManualImages)?
    {
        return Ok(set);
    }

    let token = config
        .api_token
        .as_deref()
        .filter(|t| !t.is_empty())
        .ok_or(SatelliteError::MissingCredentials)
        .at(AcquireStage::Configuration)?;
    validate_max_cloud(config.max_cloud).at(AcquireStage::Configuration)?;

    let center = Geocoder::new(transport.clone(), &config.geocoder_url)
        .geocode(location)
        .at(AcquireStage::Geocoding)?;
    let bbox = bounding_box(center, config.bbox_side_m / 2.0).at(AcquireStage::BoundingBox)?;

    let api = SatelliteApi::new(transport, &config.satellite_api_url, token);
    let window = TimeWindow::preceding_year(config.today);
    let scenes =
        discover_scenes(&api, &bbox, &window, config.max_cloud).at(AcquireStage::SceneDiscovery)?;
    let scene = &scenes[0];
    log::info!(
        "selected scene {} from {} (cloud fraction {})",
        scene.scene_id,
        scene.sensing_date,
        scene.cloud_fraction
    );

    let wanted: BTreeSet<BandId> = BandId::ALL.into_iter().collect();
    let bands = fetch_bands(&api, scene, &bbox, &wanted).at(AcquireStage::BandFetch)?;
    let rendered = render_bands(&bands, config.true_color_gain, WaterPolarity::WaterWhite)
        .at(AcquireStage::Rendering)?;
    Ok(ImageSet::new(
        rendered.rgb,
        rendered.moisture,
        rendered.water,
        ImageSource::Api,
        location,
        config.max_side,
    ))
}
