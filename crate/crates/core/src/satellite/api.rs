//! Client for the Sentinel-2 catalog and process endpoints.
//!
//! Wire format (JSON over HTTPS, bearer-token auth):
//!
//! * `POST {base}/catalog/search` with `{collection, bbox, datetime, max_cloud_fraction}`
//!   answers `{"scenes": [{"id", "sensing_date", "cloud_fraction"}]}`.
//! * `POST {base}/process` with `{collection, scene_id, bbox, datetime, bands, max_cloud_fraction}`
//!   answers `{"width", "height", "data_mask": [0|1, ...], "bands": {"B03": [...], ...}}`
//!   with row-major reflectance grids.
//!
//! `bbox` is `[min_lon, min_lat, max_lon, max_lat]` in degrees.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::Deserialize;
use serde_json::json;

use crate::geo::GeoBoundingBox;
use crate::http::{HttpRequest, HttpResponse, HttpTransport};

use super::{
    filter_scenes, validate_max_cloud, BandId, BandRaster, SatelliteError, SceneRef, TimeWindow,
};

pub const COLLECTION: &str = "sentinel-2-l2a";

#[derive(Clone)]
pub struct SatelliteApi {
    transport: Arc<dyn HttpTransport>,
    base_url: String,
    token: String,
}

#[derive(Deserialize)]
struct CatalogResponse {
    scenes: Vec<CatalogScene>,
}

#[derive(Deserialize)]
struct CatalogScene {
    id: String,
    sensing_date: NaiveDate,
    cloud_fraction: f64,
}

#[derive(Deserialize)]
struct ProcessResponse {
    width: usize,
    height: usize,
    data_mask: Vec<u8>,
    bands: BTreeMap<String, Vec<f64>>,
}

impl SatelliteApi {
    pub fn new(
        transport: Arc<dyn HttpTransport>,
        base_url: impl Into<String>,
        token: impl Into<String>,
    ) -> Self {
        Self {
            transport,
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            token: token.into(),
        }
    }

    fn post(&self, path: &str, body: &serde_json::Value) -> Result<HttpResponse, SatelliteError> {
        let request =
            HttpRequest::post_json(format!("{}{path}", self.base_url), body).bearer(&self.token);
        self.transport
            .execute(&request)
            .map_err(|e| SatelliteError::ServiceUnreachable(e.to_string()))
    }

    /// Raw catalog listing; the server-side filter is advisory only.
    pub fn search_catalog(
        &self,
        bbox: &GeoBoundingBox,
        window: &TimeWindow,
        max_cloud: f64,
    ) -> Result<Vec<SceneRef>, SatelliteError> {
        let body = json!({
            "collection": COLLECTION,
            "bbox": bbox.as_lon_lat_array(),
            "datetime": window.to_iso_interval(),
            "max_cloud_fraction": max_cloud,
        });
        let response = self.post("/catalog/search", &body)?;
        if !response.is_success() {
            return Err(SatelliteError::ServiceUnreachable(format!(
                "catalog search returned HTTP {}",
                response.status
            )));
        }
        let parsed: CatalogResponse = serde_json::from_slice(&response.body)
            .map_err(|e| SatelliteError::MalformedResponse(e.to_string()))?;
        parsed
            .scenes
            .into_iter()
            .map(|s| SceneRef::new(s.id, s.sensing_date, s.cloud_fraction))
            .collect()
    }

    pub fn fetch_band(
        &self,
        scene: &SceneRef,
        bbox: &GeoBoundingBox,
        band: BandId,
    ) -> Result<BandRaster, SatelliteError> {
        let day = TimeWindow {
            start: scene.sensing_date,
            end: scene.sensing_date,
        };
        let body = json!({
            "collection": COLLECTION,
            "scene_id": scene.scene_id,
            "bbox": bbox.as_lon_lat_array(),
            "datetime": day.to_iso_interval(),
            "bands": [band.code()],
            "max_cloud_fraction": 1.0,
        });
        let response = self.post("/process", &body)?;
        match response.status {
            404 => return Err(SatelliteError::BandUnavailable(band)),
            s if !(200..300).contains(&s) => {
                return Err(SatelliteError::ServiceUnreachable(format!(
                    "process returned HTTP {s}"
                )))
            }
            _ => {}
        }
        let mut parsed: ProcessResponse = serde_json::from_slice(&response.body)
            .map_err(|e| SatelliteError::MalformedResponse(e.to_string()))?;
        let values = parsed
            .bands
            .remove(band.code())
            .ok_or(SatelliteError::BandUnavailable(band))?;
        let mask = parsed.data_mask.iter().map(|&m| m != 0).collect();
        BandRaster::new(band, parsed.width, parsed.height, values, mask)
            .map_err(|e| SatelliteError::MalformedResponse(e.to_string()))
    }
}

/// Scenes under the cloud ceiling within the window, newest first.
pub fn discover_scenes(
    api: &SatelliteApi,
    bbox: &GeoBoundingBox,
    window: &TimeWindow,
    max_cloud: f64,
) -> Result<Vec<SceneRef>, SatelliteError> {
    validate_max_cloud(max_cloud)?;
    let catalog = api.search_catalog(bbox, window, max_cloud)?;
    let eligible = filter_scenes(&catalog, window, max_cloud);
    if eligible.is_empty() {
        return Err(SatelliteError::NoEligibleScene { max_cloud });
    }
    Ok(eligible)
}

/// Fetches each band concurrently and checks that all grids share one shape.
pub fn fetch_bands(
    api: &SatelliteApi,
    scene: &SceneRef,
    bbox: &GeoBoundingBox,
    bands: &BTreeSet<BandId>,
) -> Result<BTreeMap<BandId, BandRaster>, SatelliteError> {
    if bands.is_empty() {
        return Err(SatelliteError::EmptyBandSet);
    }
    let results: Vec<Result<BandRaster, SatelliteError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = bands
            .iter()
            .map(|&band| scope.spawn(move || api.fetch_band(scene, bbox, band)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("band fetch thread panicked"))
            .collect()
    });
    let mut out = BTreeMap::new();
    for raster in results {
        let raster = raster?;
        out.insert(raster.band(), raster);
    }
    let mut shapes = out.values().map(|r| (r.band(), r.dimensions()));
    if let Some((first_band, first)) = shapes.next() {
        if let Some((band, dims)) = shapes.find(|(_, d)| *d != first) {
            return Err(SatelliteError::GeometryMismatch {
                first: (first_band, first),
                other: (band, dims),
            });
        }
    }
    Ok(out)
}
