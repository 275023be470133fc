//! Place-name geocoding and the retrieval bounding box around a town.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{HttpRequest, HttpTransport};

/// Meters per degree of latitude on the spherical-earth approximation.
pub const METERS_PER_DEGREE: f64 = 111_320.0;

/// Centers at or beyond this absolute latitude are rejected by [`bounding_box`].
pub const MAX_ABS_LATITUDE: f64 = 89.0;

pub const DEFAULT_USER_AGENT: &str = concat!(
    "ecoscapes/",
    env!("CARGO_PKG_VERSION"),
    " (batch climate-report pipeline)"
);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("location name is empty")]
    EmptyName,
    #[error("no geocoding match for {0:?}")]
    NoMatch(String),
    #[error("geocoding service unreachable: {0}")]
    ServiceUnreachable(String),
    #[error("malformed geocoding response: {0}")]
    MalformedResponse(String),
    #[error("coordinates out of range: lat {lat}, lon {lon}")]
    InvalidCoordinates { lat: f64, lon: f64 },
    #[error("half width must be positive and finite, got {0}")]
    InvalidHalfWidth(f64),
    #[error("latitude {0} is too close to a pole for a degree-based box")]
    PolarRegion(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::InvalidCoordinates { lat, lon });
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBoundingBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
    pub center: GeoPoint,
    pub half_width_m: f64,
}

impl GeoBoundingBox {
    pub fn lat_span(&self) -> f64 {
        self.max_lat - self.min_lat
    }

    pub fn lon_span(&self) -> f64 {
        self.max_lon - self.min_lon
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat)
            && (self.min_lon..=self.max_lon).contains(&p.lon)
    }

    /// `[min_lon, min_lat, max_lon, max_lat]`, the usual GeoJSON bbox order.
    pub fn as_lon_lat_array(&self) -> [f64; 4] {
        [self.min_lon, self.min_lat, self.max_lon, self.max_lat]
    }
}

/// Square box spanning `half_width_m` meters in each cardinal direction.
pub fn bounding_box(center: GeoPoint, half_width_m: f64) -> Result<GeoBoundingBox, GeoError> {
    if !(half_width_m.is_finite() && half_width_m > 0.0) {
        return Err(GeoError::InvalidHalfWidth(half_width_m));
    }
    if center.lat.abs() >= MAX_ABS_LATITUDE {
        return Err(GeoError::PolarRegion(center.lat));
    }
    let d_lat = half_width_m / METERS_PER_DEGREE;
    let d_lon = half_width_m / (METERS_PER_DEGREE * center.lat.to_radians().cos());
    Ok(GeoBoundingBox {
        min_lat: center.lat - d_lat,
        min_lon: center.lon - d_lon,
        max_lat: center.lat + d_lat,
        max_lon: center.lon + d_lon,
        center,
        half_width_m,
    })
}

#[derive(Debug, Deserialize)]
struct SearchHit {
    lat: String,
    lon: String,
}

/// Decodes a Nominatim-style search response and returns the first hit.
pub fn parse_search_response(query: &str, body: &[u8]) -> Result<GeoPoint, GeoError> {
    let hits: Vec<SearchHit> =
        serde_json::from_slice(body).map_err(|e| GeoError::MalformedResponse(e.to_string()))?;
    let first = hits
        .first()
        .ok_or_else(|| GeoError::NoMatch(query.to_owned()))?;
    let parse = |field: &str, s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| GeoError::MalformedResponse(format!("{field} is not a number: {s:?}")))
    };
    let lat = parse("lat", &first.lat)?;
    let lon = parse("lon", &first.lon)?;
    GeoPoint::new(lat, lon).map_err(|e| GeoError::MalformedResponse(e.to_string()))
}

/// Forward geocoder speaking the Nominatim `/search` protocol.
#[derive(Clone)]
pub struct Geocoder {
    transport: Arc<dyn HttpTransport>,
    endpoint: String,
    user_agent: String,
}

impl Geocoder {
    pub fn new(transport: Arc<dyn HttpTransport>, endpoint: impl Into<String>) -> Self {
        Self {
            transport,
            endpoint: endpoint.into(),
            user_agent: DEFAULT_USER_AGENT.to_owned(),
        }
    }

    pub fn with_user_agent(mut self, user_agent: impl Into<String>) -> Self {
        self.user_agent = user_agent.into();
        self
    }

    pub fn geocode(&self, name: &str) -> Result<GeoPoint, GeoError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(GeoError::EmptyName);
        }
        let request = HttpRequest::get(&self.endpoint)
            .query("q", name)
            .query("format", "jsonv2")
            .query("limit", "1")
            .header("User-Agent", &self.user_agent);
        let response = self
            .transport
            .execute(&request)
            .map_err(|e| GeoError::ServiceUnreachable(e.to_string()))?;
        if !response.is_success() {
            return Err(GeoError::ServiceUnreachable(format!(
                "HTTP {}",
                response.status
            )));
        }
        parse_search_response(name, &response.body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{HttpResponse, MockTransport};
    use proptest::prelude::*;

    const ROSSTAL_FIXTURE: &str = include_str!("../fixtures/nominatim_rosstal.json");

    fn geocoder(body: &'static str) -> (Arc<MockTransport>, Geocoder) {
        let t = Arc::new(
            MockTransport::new().route("http://geo.test/", move |_| HttpResponse::ok(body)),
        );
        let g = Geocoder::new(t.clone(), "http://geo.test/search");
        (t, g)
    }

    #[test]
    fn equator_box_spans_two_degrees() {
        let b = bounding_box(GeoPoint::new(0.0, 0.0).unwrap(), 111_320.0).unwrap();
        assert!((b.min_lat + 1.0).abs() < 1e-12 && (b.max_lat - 1.0).abs() < 1e-12);
        assert!((b.min_lon + 1.0).abs() < 1e-12 && (b.max_lon - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sixty_degrees_doubles_longitude_extent() {
        let b = bounding_box(GeoPoint::new(60.0, 10.0).unwrap(), 111_320.0).unwrap();
        assert!((b.max_lon - 10.0 - 2.0).abs() < 1e-9);
        assert!((b.lon_span() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_boxes_rejected() {
        let c = GeoPoint::new(49.0, 11.0).unwrap();
        assert_eq!(bounding_box(c, 0.0), Err(GeoError::InvalidHalfWidth(0.0)));
        assert!(matches!(
            bounding_box(c, -5.0),
            Err(GeoError::InvalidHalfWidth(_))
        ));
        let polar = GeoPoint::new(89.0, 0.0).unwrap();
        assert_eq!(bounding_box(polar, 100.0), Err(GeoError::PolarRegion(89.0)));
    }

    #[test]
    fn point_validation() {
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.1).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
    }

    #[test]
    fn geocode_rosstal_fixture() {
        let (t, g) = geocoder(ROSSTAL_FIXTURE);
        let p = g.geocode("Roßtal").unwrap();
        assert!((p.lat() - 49.3976).abs() < 0.01, "{p:?}");
        assert!((p.lon() - 10.8887).abs() < 0.01, "{p:?}");
        let req = &t.calls()[0];
        assert!(req.query.contains(&("q".into(), "Roßtal".into())));
        assert!(req
            .header_value("user-agent")
            .is_some_and(|ua| ua.starts_with("ecoscapes/")));
    }

    #[test]
    fn geocode_identity_pass_through() {
        let (_, g) = geocoder(r#"[{"lat":"49.0","lon":"11.0","display_name":"x"}]"#);
        assert_eq!(
            g.geocode("Somewhere").unwrap(),
            GeoPoint::new(49.0, 11.0).unwrap()
        );
    }

    #[test]
    fn geocode_errors() {
        let (t, g) = geocoder("[]");
        assert_eq!(g.geocode("   "), Err(GeoError::EmptyName));
        assert_eq!(t.call_count(), 0);
        assert_eq!(
            g.geocode("Nowhere"),
            Err(GeoError::NoMatch("Nowhere".into()))
        );

        let (_, g) = geocoder("{not json");
        assert!(matches!(
            g.geocode("x"),
            Err(GeoError::MalformedResponse(_))
        ));
        let (_, g) = geocoder(r#"[{"lat":"north","lon":"1"}]"#);
        assert!(matches!(
            g.geocode("x"),
            Err(GeoError::MalformedResponse(_))
        ));

        let offline = Geocoder::new(Arc::new(MockTransport::new()), "http://geo.test/search");
        assert!(matches!(
            offline.geocode("x"),
            Err(GeoError::ServiceUnreachable(_))
        ));
    }

    #[test]
    fn geocode_is_pure_in_response_bytes() {
        let (_, g) = geocoder(ROSSTAL_FIXTURE);
        assert_eq!(g.geocode("Roßtal").unwrap(), g.geocode("Roßtal").unwrap());
    }

    proptest! {
        #[test]
        fn box_contains_center_and_lat_span_is_exact(
            lat in -88.9f64..88.9, lon in -179.0f64..179.0, hw in 1.0f64..50_000.0
        ) {
            let c = GeoPoint::new(lat, lon).unwrap();
            let b = bounding_box(c, hw).unwrap();
            prop_assert!(b.contains(c));
            prop_assert!(b.min_lat < b.max_lat && b.min_lon < b.max_lon);
            prop_assert!((b.lat_span() - 2.0 * hw / METERS_PER_DEGREE).abs() < 1e-9);
        }

        #[test]
        fn shrinking_half_width_shrinks_spans(
            lat in -88.0f64..88.0, hw in 2.0f64..50_000.0, f in 0.01f64..0.99
        ) {
            let c = GeoPoint::new(lat, 0.0).unwrap();
            let big = bounding_box(c, hw).unwrap();
            let small = bounding_box(c, hw * f).unwrap();
            prop_assert!(small.lat_span() < big.lat_span());
            prop_assert!(small.lon_span() < big.lon_span());
        }
    }
}
