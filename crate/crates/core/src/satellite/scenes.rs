use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::SatelliteError;

pub const DEFAULT_MAX_CLOUD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRef {
    pub scene_id: String,
    pub sensing_date: NaiveDate,
    pub cloud_fraction: f64,
}

impl SceneRef {
    pub fn new(
        scene_id: impl Into<String>,
        sensing_date: NaiveDate,
        cloud_fraction: f64,
    ) -> Result<Self, SatelliteError> {
        if !(0.0..=1.0).contains(&cloud_fraction) {
            return Err(SatelliteError::MalformedResponse(format!(
                "cloud fraction {cloud_fraction} outside [0, 1]"
            )));
        }
        Ok(Self {
            scene_id: scene_id.into(),
            sensing_date,
            cloud_fraction,
        })
    }
}

/// Inclusive calendar-date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TimeWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, SatelliteError> {
        if start > end {
            return Err(SatelliteError::InvalidWindow { start, end });
        }
        Ok(Self { start, end })
    }

    /// `[today - 365 days, today]`.
    pub fn preceding_year(today: NaiveDate) -> Self {
        Self {
            start: today - Duration::days(365),
            end: today,
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        (self.start..=self.end).contains(&date)
    }

    /// ISO-8601 interval covering both end days completely.
    pub fn to_iso_interval(&self) -> String {
        format!("{}T00:00:00Z/{}T23:59:59Z", self.start, self.end)
    }
}

pub fn validate_max_cloud(max_cloud: f64) -> Result<(), SatelliteError> {
    if max_cloud > 0.0 && max_cloud <= 1.0 {
        Ok(())
    } else {
        Err(SatelliteError::InvalidCloudCeiling(max_cloud))
    }
}

/// Keeps scenes strictly under the cloud ceiling and inside the window,
/// newest first. Ties on date fall back to scene id for a stable order.
pub fn filter_scenes(catalog: &[SceneRef], window: &TimeWindow, max_cloud: f64) -> Vec<SceneRef> {
    let mut eligible: Vec<SceneRef> = catalog
        .iter()
        .filter(|s| s.cloud_fraction < max_cloud && window.contains(s.sensing_date))
        .cloned()
        .collect();
    eligible.sort_by(|a, b| {
        b.sensing_date
            .cmp(&a.sensing_date)
            .then_with(|| a.scene_id.cmp(&b.scene_id))
    });
    eligible
}
