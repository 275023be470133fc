//! TOML configuration with defaults, range checks and token resolution.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{StageModels, WaterParams};
use crate::llm::DecodingParams;
use crate::raster::DEFAULT_MAX_SIDE;
use crate::satellite::DEFAULT_MAX_CLOUD;

pub const DEFAULT_API_TOKEN_ENV: &str = "ECOSCAPES_API_TOKEN";
pub const DEFAULT_LLM_TOKEN_ENV: &str = "ECOSCAPES_LLM_TOKEN";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path:?}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("unknown config key: {0}")]
    UnknownKey(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config value {key} = {value} outside {range}")]
    OutOfRangeValue {
        key: String,
        value: String,
        range: String,
    },
    #[error("remote chat backend needs a token: set {env} or llm.token")]
    MissingToken { env: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Stub,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    pub backend: BackendKind,
    pub endpoint: String,
    pub token_env: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    pub models: StageModels,
    pub decoding: DecodingParams,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    #[serde(skip)]
    pub resolved_token: Option<String>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Stub,
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            token_env: DEFAULT_LLM_TOKEN_ENV.into(),
            token: None,
            models: StageModels::default(),
            decoding: DecodingParams::default(),
            max_retries: crate::llm::DEFAULT_MAX_RETRIES,
            retry_base_ms: 500,
            resolved_token: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub geocoder_url: String,
    pub satellite_api_url: String,
    pub api_token_env: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_token: Option<String>,
    pub bbox_side_m: f64,
    pub max_cloud: f64,
    pub max_side: u32,
    pub true_color_gain: f64,
    pub invert_manual_water: bool,
    pub manual_root: PathBuf,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_dir: Option<PathBuf>,
    /// Pins "today" for the scene search window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub today: Option<NaiveDate>,
    pub http_timeout_s: u64,
    pub water: WaterParams,
    pub llm: LlmConfig,
    #[serde(skip)]
    pub resolved_api_token: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            geocoder_url: "https://nominatim.openstreetmap.org/search".into(),
            satellite_api_url: "http://localhost:8700/v1".into(),
            api_token_env: DEFAULT_API_TOKEN_ENV.into(),
            api_token: None,
            bbox_side_m: 5000.0,
            max_cloud: DEFAULT_MAX_CLOUD,
            max_side: DEFAULT_MAX_SIDE,
            true_color_gain: crate::raster::DEFAULT_TRUE_COLOR_GAIN,
            invert_manual_water: false,
            manual_root: PathBuf::from("satellite_data"),
            output_dir: PathBuf::from("output"),
            corpus_dir: None,
            today: None,
            http_timeout_s: 60,
            water: WaterParams::default(),
            llm: LlmConfig::default(),
            resolved_api_token: None,
        }
    }
}

fn check<T: PartialOrd + std::fmt::Display>(
    key: &str,
    value: T,
    ok: bool,
    range: &str,
) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::OutOfRangeValue {
            key: key.into(),
            value: value.to_string(),
            range: range.into(),
        })
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let b = self.bbox_side_m;
        check(
            "bbox_side_m",
            b,
            b.is_finite() && b > 0.0 && b <= 200_000.0,
            "(0, 200000]",
        )?;
        let c = self.max_cloud;
        check("max_cloud", c, c > 0.0 && c <= 1.0, "(0, 1]")?;
        check("max_side", self.max_side, self.max_side >= 1, ">= 1")?;
        let g = self.true_color_gain;
        check("true_color_gain", g, g.is_finite() && g > 0.0, "(0, inf)")?;
        check(
            "http_timeout_s",
            self.http_timeout_s,
            self.http_timeout_s >= 1,
            ">= 1",
        )?;
        let w = &self.water;
        check(
            "water.opening_radius",
            w.opening_radius,
            w.opening_radius <= 64,
            "[0, 64]",
        )?;
        let f = w.min_area_fraction;
        check(
            "water.min_area_fraction",
            f,
            (0.0..1.0).contains(&f),
            "[0, 1)",
        )?;
        let s = w.significance_cutoff;
        check(
            "water.significance_cutoff",
            s,
            (0.0..=1.0).contains(&s),
            "[0, 1]",
        )?;
        let t = self.llm.decoding.temperature;
        check(
            "llm.decoding.temperature",
            t,
            (0.0..=2.0).contains(&t),
            "[0, 2]",
        )?;
        check(
            "llm.max_retries",
            self.llm.max_retries,
            self.llm.max_retries <= 10,
            "[0, 10]",
        )?;
        Ok(())
    }

    /// Satellite API token: literal value first, then the environment.
    fn resolve_tokens(&mut self, env: &dyn Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        let pick = |literal: &Option<String>, var: &str| {
            literal
                .clone()
                .or_else(|| env(var))
                .filter(|t| !t.trim().is_empty())
        };
        self.resolved_api_token = pick(&self.api_token, &self.api_token_env);
        self.llm.resolved_token = pick(&self.llm.token, &self.llm.token_env);
        if self.llm.backend == BackendKind::Remote && self.llm.resolved_token.is_none() {
            return Err(ConfigError::MissingToken {
                env: self.llm.token_env.clone(),
            });
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_config(
    text: &str,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<Config, ConfigError> {
    let mut config: Config = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_owned();
        if msg.starts_with("unknown field") {
            ConfigError::UnknownKey(msg)
        } else {
            ConfigError::Parse(e.to_string())
        }
    })?;
    config.validate()?;
    config.resolve_tokens(env)?;
    Ok(config)
}

/// `None` means all defaults.
pub fn load_config(
    path: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<Config, ConfigError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
            path: p.to_owned(),
            message: e.to_string(),
        })?,
        None => String::new(),
    };
    parse_config(&text, env)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("", &no_env).unwrap();
        assert_eq!(c.bbox_side_m, 5000.0);
        assert_eq!(c.max_cloud, 0.01);
        assert_eq!(c.max_side, 1024);
        assert_eq!(c.manual_root, PathBuf::from("satellite_data"));
        assert_eq!(c.llm.backend, BackendKind::Stub);
        assert_eq!(c.llm.decoding.temperature, 0.0);
        assert_eq!(c.water.threshold, 128);
        assert_eq!(c, Config::default());
    }

    #[test]
    fn out_of_range_values() {
        for text in [
            "max_cloud = 1.5",
            "max_cloud = 0.0",
            "bbox_side_m = -1.0",
            "max_side = 0",
            "[water]\nmin_area_fraction = 1.0",
            "[llm.decoding]\ntemperature = 3.0",
        ] {
            assert!(
                matches!(
                    parse_config(text, &no_env),
                    Err(ConfigError::OutOfRangeValue { .. })
                ),
                "{text}"
            );
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "colour = 1",
            "[water]\ndepth = 2",
            "[llm.models]\nvision = \"x\"",
        ] {
            assert!(
                matches!(parse_config(text, &no_env), Err(ConfigError::UnknownKey(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn tokens() {
        let c = parse_config("", &no_env).unwrap();
        assert_eq!(c.resolved_api_token, None);

        let env = |k: &str| (k == DEFAULT_API_TOKEN_ENV).then(|| "sat".to_owned());
        let c = parse_config("", &env).unwrap();
        assert_eq!(c.resolved_api_token.as_deref(), Some("sat"));

        let c = parse_config("api_token = \"lit\"", &env).unwrap();
        assert_eq!(c.resolved_api_token.as_deref(), Some("lit"));

        assert_eq!(
            parse_config("[llm]\nbackend = \"remote\"", &no_env),
            Err(ConfigError::MissingToken {
                env: DEFAULT_LLM_TOKEN_ENV.into()
            })
        );
        let env = |k: &str| (k == DEFAULT_LLM_TOKEN_ENV).then(|| "llm".to_owned());
        let c = parse_config("[llm]\nbackend = \"remote\"", &env).unwrap();
        assert_eq!(c.llm.resolved_token.as_deref(), Some("llm"));
    }

    #[test]
    fn round_trip_is_stable() {
        let text = "max_cloud = 0.05\ntoday = \"2024-07-01\"\n[water]\nthreshold = 100\n[llm.models]\nrgb_model = \"a\"\nwater_model = \"b\"\nmoisture_model = \"c\"\nreport_model = \"d\"\n";
        let c = parse_config(text, &no_env).unwrap();
        let once = c.to_toml();
        let again = parse_config(&once, &no_env).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml(), once);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_config(Some(Path::new("/nonexistent/ecoscapes.toml")), &no_env),
            Err(ConfigError::Io { .. })
        ));
    }
}
