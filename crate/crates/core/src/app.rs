//! The commands behind the binary: full runs, standalone index rendering,
//! score bookkeeping and manual-image validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::{NaiveDate, Utc};
use image::DynamicImage;
use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{
    build_modules, load_prompt_corpus, AnalysisInputs, ChatSetup, CorpusError, PromptCorpus,
    CLIMATE_REPORT,
};
use crate::config::{BackendKind, Config, ConfigError};
use crate::evaluation::{
    compare_systems, Criterion, EvalError, Recorded, ScoreRecord, ScoreStore, System,
};
use crate::http::{HttpTransport, ReqwestTransport};
use crate::llm::{ChatBackend, RemoteBackend, StubBackend};
use crate::pipeline::{execute, resolve_order, ArtifactStore, ModuleStatus, PlanError, RunReport};
use crate::raster::WaterPolarity;
use crate::satellite::{
    acquire, load_manual_images, manual_dir, render_bands, AcquireConfig, BandId, BandRaster,
    ImageSet, SatelliteError, MOISTURE_FILE, RGB_FILE, WATER_FILE,
};

pub const RUN_REPORT_FILE: &str = "run_report.json";

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Satellite(#[from] SatelliteError),
    #[error("location is empty")]
    EmptyLocation,
    #[error("{path:?}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("band {0} missing from the bands directory")]
    MissingBand(BandId),
    #[error("band {band} provided twice ({first:?}, {second:?})")]
    DuplicateBand {
        band: BandId,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("band file {path:?}: {message}")]
    BandFile { path: PathBuf, message: String },
    #[error("cannot create HTTP client: {0}")]
    Transport(String),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> AppError + '_ {
    move |e| AppError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

/// Injected collaborators of a run.
pub struct RunDeps {
    pub transport: Arc<dyn HttpTransport>,
    /// Overrides the backend chosen in the config.
    pub backend: Option<Arc<dyn ChatBackend>>,
    pub today: NaiveDate,
}

impl RunDeps {
    pub fn live(config: &Config) -> Result<Self, AppError> {
        let transport = ReqwestTransport::new(Duration::from_secs(config.http_timeout_s))
            .map_err(|e| AppError::Transport(e.message))?;
        Ok(Self {
            transport: Arc::new(transport),
            backend: None,
            today: Utc::now().date_naive(),
        })
    }
}

pub fn chat_backend(config: &Config, transport: Arc<dyn HttpTransport>) -> Arc<dyn ChatBackend> {
    match config.llm.backend {
        BackendKind::Stub => Arc::new(StubBackend),
        BackendKind::Remote => Arc::new(
            RemoteBackend::new(
                transport,
                &config.llm.endpoint,
                config.llm.resolved_token.clone(),
            )
            .with_retry(
                config.llm.max_retries,
                Duration::from_millis(config.llm.retry_base_ms),
            ),
        ),
    }
}

pub fn corpus(config: &Config) -> Result<PromptCorpus, CorpusError> {
    match &config.corpus_dir {
        Some(dir) => load_prompt_corpus(dir),
        None => PromptCorpus::shipped(),
    }
}

pub fn acquire_config(config: &Config, today: NaiveDate) -> AcquireConfig {
    AcquireConfig {
        manual_root: config.manual_root.clone(),
        geocoder_url: config.geocoder_url.clone(),
        satellite_api_url: config.satellite_api_url.clone(),
        api_token: config.resolved_api_token.clone(),
        bbox_side_m: config.bbox_side_m,
        max_cloud: config.max_cloud,
        max_side: config.max_side,
        true_color_gain: config.true_color_gain,
        invert_manual_water: config.invert_manual_water,
        today: config.today.unwrap_or(today),
    }
}

/// `<output_dir>/<location>`, or a timestamped directory beneath it when
/// that already exists.
pub fn run_directory(output_dir: &Path, location: &str) -> PathBuf {
    let base = output_dir.join(location);
    if !base.exists() {
        return base;
    }
    let stamp = Utc::now().format("run-%Y%m%dT%H%M%SZ").to_string();
    let mut dir = base.join(&stamp);
    let mut n = 2;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{n}"));
        n += 1;
    }
    dir
}

/// 0 when every module succeeded, 2 when the report exists despite failed or
/// skipped modules, 1 when there is no report.
pub fn exit_code(report: &RunReport) -> i32 {
    match report.status(CLIMATE_REPORT) {
        Some(s) if s.succeeded() => {
            if report.statuses.values().all(ModuleStatus::succeeded) {
                0
            } else {
                2
            }
        }
        _ => 1,
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub run_dir: PathBuf,
    pub report: RunReport,
}

pub fn run_pipeline(
    location: &str,
    config: &Config,
    deps: &RunDeps,
) -> Result<RunOutcome, AppError> {
    if location.trim().is_empty() {
        return Err(AppError::EmptyLocation);
    }
    let corpus = Arc::new(corpus(config)?);
    let backend = deps
        .backend
        .clone()
        .unwrap_or_else(|| chat_backend(config, deps.transport.clone()));
    let chat = ChatSetup {
        backend,
        models: config.llm.models.clone(),
        params: config.llm.decoding.clone(),
    };
    let acq = acquire_config(config, deps.today);
    let transport = deps.transport.clone();
    let modules = build_modules(AnalysisInputs {
        location: location.to_owned(),
        loader: Arc::new(move |loc: &str| {
            acquire(loc, &acq, transport.clone()).map_err(|e| e.to_string())
        }),
        corpus,
        chat,
        water: config.water,
    });
    let plan = resolve_order(&modules)?;
    let mut store = ArtifactStore::new();
    let report = execute(&modules, &plan, &mut store);

    let run_dir = run_directory(&config.output_dir, location);
    store.mirror_to(&run_dir).map_err(io_err(&run_dir))?;
    let report_path = run_dir.join(RUN_REPORT_FILE);
    std::fs::write(&report_path, report.to_json() + "\n").map_err(io_err(&report_path))?;
    Ok(RunOutcome {
        exit_code: exit_code(&report),
        run_dir,
        report,
    })
}

/// Sidecar `<stem>.json` next to each `<stem>.png` band file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandSidecar {
    band: String,
    #[serde(default = "default_scale")]
    scale: f64,
    #[serde(default)]
    nodata: Option<u32>,
}

fn default_scale() -> f64 {
    1e-4
}

fn read_band(sidecar_path: &Path) -> Result<(BandId, PathBuf, BandRaster), AppError> {
    let fail = |message: String| AppError::BandFile {
        path: sidecar_path.to_owned(),
        message,
    };
    let text = std::fs::read_to_string(sidecar_path).map_err(|e| fail(e.to_string()))?;
    let meta: BandSidecar = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    let band: BandId = meta
        .band
        .parse()
        .map_err(|e: crate::satellite::UnknownBand| fail(e.to_string()))?;
    if !(meta.scale.is_finite() && meta.scale > 0.0) {
        return Err(fail(format!("scale must be positive, got {}", meta.scale)));
    }
    let png = sidecar_path.with_extension("png");
    let img = image::open(&png).map_err(|e| AppError::BandFile {
        path: png.clone(),
        message: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let dn: Vec<u32> = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma16(g) => g.into_raw().into_iter().map(u32::from).collect(),
        other => {
            return Err(AppError::BandFile {
                path: png,
                message: format!("expected a single-channel image, got {:?}", other.color()),
            })
        }
    };
    let mask: Vec<bool> = dn.iter().map(|&v| Some(v) != meta.nodata).collect();
    let values: Vec<f64> = dn.iter().map(|&v| f64::from(v) * meta.scale).collect();
    let raster = BandRaster::new(band, w, h, values, mask).map_err(|e| AppError::BandFile {
        path: png.clone(),
        message: e.to_string(),
    })?;
    Ok((band, png, raster))
}

/// Renders rgb.png, moisture.png and water.png from six band files.
pub fn compute_indices(
    bands_dir: &Path,
    out_dir: &Path,
    config: &Config,
) -> Result<Vec<PathBuf>, AppError> {
    let mut sidecars: Vec<PathBuf> = std::fs::read_dir(bands_dir)
        .map_err(io_err(bands_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    sidecars.sort();
    let mut bands: BTreeMap<BandId, (PathBuf, BandRaster)> = BTreeMap::new();
    for s in &sidecars {
        let (band, png, raster) = read_band(s)?;
        if let Some((first, _)) = bands.get(&band) {
            return Err(AppError::DuplicateBand {
                band,
                first: first.clone(),
                second: png,
            });
        }
        bands.insert(band, (png, raster));
    }
    if let Some(missing) = BandId::ALL.into_iter().find(|b| !bands.contains_key(b)) {
        return Err(AppError::MissingBand(missing));
    }
    let rasters = bands.into_iter().map(|(b, (_, r))| (b, r)).collect();
    let r = render_bands(&rasters, config.true_color_gain, WaterPolarity::WaterWhite)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let save = |name: &str, img: DynamicImage| -> Result<PathBuf, AppError> {
        let path = out_dir.join(name);
        img.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| AppError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
        Ok(path)
    };
    written.push(save(RGB_FILE, DynamicImage::ImageRgb8(r.rgb))?);
    written.push(save(MOISTURE_FILE, DynamicImage::ImageRgb8(r.moisture))?);
    written.push(save(WATER_FILE, DynamicImage::ImageLuma8(r.water))?);
    Ok(written)
}

pub fn score_add(path: &Path, record: ScoreRecord) -> Result<Recorded, AppError> {
    let mut store = ScoreStore::load(path)?;
    let outcome = store.record(record)?;
    if outcome == Recorded::Inserted {
        store.save(path)?;
    }
    Ok(outcome)
}

/// Comparison tables for `criterion`, or for every criterion with data at
/// `location` when `None`.
pub fn score_summary(
    store: &ScoreStore,
    location: &str,
    criterion: Option<Criterion>,
    systems: &[System],
    json: bool,
) -> Result<String, AppError> {
    let criteria: Vec<Criterion> = match criterion {
        Some(c) => vec![c],
        None => Criterion::ALL
            .into_iter()
            .filter(|c| {
                store
                    .records()
                    .any(|r| r.location == location && r.criterion == *c)
            })
            .collect(),
    };
    if criteria.is_empty() {
        return Err(EvalError::NoData {
            location: location.into(),
            system: systems.first().copied().unwrap_or(System::Cc),
            criterion: Criterion::Correctness,
        }
        .into());
    }
    let comparisons = criteria
        .into_iter()
        .map(|c| compare_systems(store, location, c, systems))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(if json {
        serde_json::to_string_pretty(&comparisons).expect("comparisons serialize") + "\n"
    } else {
        comparisons
            .iter()
            .map(|c| c.to_table())
            .collect::<Vec<_>>()
            .join("\n")
    })
}

/// `Ok(None)` when no manual directory exists for `location`.
pub fn validate_manual(
    location: &str,
    config: &Config,
) -> Result<Option<(PathBuf, ImageSet)>, AppError> {
    let set = load_manual_images(
        &config.manual_root,
        location,
        config.max_side,
        config.invert_manual_water,
    )?;
    Ok(set.map(|s| (manual_dir(&config.manual_root, location), s)))
}
