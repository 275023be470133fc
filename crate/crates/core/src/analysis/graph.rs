use std::sync::Arc;

use image::DynamicImage;

use super::corpus::PromptCorpus;
use super::stages::{
    apply_water_modification, assemble_downstream_prompt, generate_climate_report,
    run_moisture_analysis, run_rgb_analysis, run_water_analysis, ChatSetup,
};
use crate::pipeline::{Artifact, ModuleContext, ModuleFailure, ModuleOutput, ModuleSpec};
use crate::raster::{
    denoise_mask, threshold_mask, DEFAULT_MIN_AREA_FRACTION, DEFAULT_OPENING_RADIUS,
    DEFAULT_SIGNIFICANCE_CUTOFF, DEFAULT_THRESHOLD,
};
use crate::satellite::{ImageSet, MOISTURE_FILE, RGB_FILE, WATER_FILE};

pub const SATELLITE_LOADER: &str = "satellite_loader";
pub const RGB_ANALYSIS: &str = "rgb_analysis";
pub const MOISTURE_ANALYSIS: &str = "moisture_analysis";
pub const WATER_PREPROCESSING: &str = "water_preprocessing";
pub const WATER_ANALYSIS: &str = "water_analysis";
pub const WATER_RGB: &str = "water_rgb_analysis";
pub const CLIMATE_REPORT: &str = "climate_report";
pub const DOWNSTREAM_PROMPT: &str = "downstream_prompt";

pub const RGB_ANALYSIS_FILE: &str = "rgb_analysis.txt";
pub const MOISTURE_ANALYSIS_FILE: &str = "moisture_analysis.txt";
pub const WATER_PREPROCESSED_FILE: &str = "water_preprocessed.png";
pub const WATER_ANALYSIS_FILE: &str = "water_analysis.txt";
pub const CLIMATE_REPORT_FILE: &str = "climate_report.txt";
pub const DOWNSTREAM_PROMPT_FILE: &str = "downstream_prompt.txt";

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaterParams {
    pub threshold: u8,
    pub opening_radius: usize,
    pub min_area_fraction: f64,
    pub significance_cutoff: f64,
}

impl Default for WaterParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            opening_radius: DEFAULT_OPENING_RADIUS,
            min_area_fraction: DEFAULT_MIN_AREA_FRACTION,
            significance_cutoff: DEFAULT_SIGNIFICANCE_CUTOFF,
        }
    }
}

pub type ImageLoader = Arc<dyn Fn(&str) -> Result<ImageSet, String> + Send + Sync>;

pub struct AnalysisInputs {
    pub location: String,
    pub loader: ImageLoader,
    pub corpus: Arc<PromptCorpus>,
    pub chat: ChatSetup,
    pub water: WaterParams,
}

fn image<'a>(ctx: &'a ModuleContext<'_>, name: &str) -> Result<&'a DynamicImage, ModuleFailure> {
    ctx.store
        .image(name)
        .ok_or_else(|| ModuleFailure(format!("artifact {name} missing")))
}

fn text<'a>(ctx: &'a ModuleContext<'_>, name: &str) -> Result<&'a str, ModuleFailure> {
    ctx.store
        .text(name)
        .ok_or_else(|| ModuleFailure(format!("artifact {name} missing")))
}

/// The full module graph for one location.
pub fn build_modules(inputs: AnalysisInputs) -> Vec<ModuleSpec> {
    let AnalysisInputs {
        location,
        loader,
        corpus,
        chat,
        water,
    } = inputs;
    let location = Arc::new(location);

    let loader_mod = {
        let location = location.clone();
        ModuleSpec::new(SATELLITE_LOADER, move |_| {
            let set = loader(&location).map_err(ModuleFailure)?;
            let mut out = ModuleOutput::with(vec![
                Artifact::image(RGB_FILE, set.rgb),
                Artifact::image(MOISTURE_FILE, set.moisture),
                Artifact::image(WATER_FILE, set.water),
            ]);
            out.note = Some(format!("{:?} images", set.source).to_lowercase());
            Ok(out)
        })
    };

    let rgb_mod = {
        let (corpus, chat) = (corpus.clone(), chat.clone());
        ModuleSpec::new(RGB_ANALYSIS, move |ctx| {
            let t = run_rgb_analysis(image(ctx, RGB_FILE)?, &corpus, &chat)?;
            Ok(ModuleOutput::with(vec![Artifact::text(
                RGB_ANALYSIS_FILE,
                t.rendered,
            )]))
        })
        .depends_on([SATELLITE_LOADER])
    };

    let moisture_mod = {
        let (corpus, chat) = (corpus.clone(), chat.clone());
        ModuleSpec::new(MOISTURE_ANALYSIS, move |ctx| {
            let t = run_moisture_analysis(image(ctx, MOISTURE_FILE)?, &corpus, &chat)?;
            Ok(ModuleOutput::with(vec![Artifact::text(
                MOISTURE_ANALYSIS_FILE,
                t.rendered,
            )]))
        })
        .depends_on([SATELLITE_LOADER])
    };

    let preprocess_mod = ModuleSpec::new(WATER_PREPROCESSING, move |ctx| {
        let gray = image(ctx, WATER_FILE)?.to_luma8();
        let mask = threshold_mask(&gray, water.threshold);
        let clean = denoise_mask(&mask, water.opening_radius, water.min_area_fraction)?;
        Ok(ModuleOutput::with(vec![Artifact::image(
            WATER_PREPROCESSED_FILE,
            clean.to_gray(),
        )]))
    })
    .depends_on([SATELLITE_LOADER]);

    let water_mod = {
        let (corpus, chat) = (corpus.clone(), chat.clone());
        ModuleSpec::new(WATER_ANALYSIS, move |ctx| {
            let mask = image(ctx, WATER_PREPROCESSED_FILE)?.to_luma8();
            match run_water_analysis(&mask, water.significance_cutoff, &corpus, &chat)? {
                Some(t) => Ok(ModuleOutput::with(vec![Artifact::text(
                    WATER_ANALYSIS_FILE,
                    t.rendered,
                )])),
                None => Ok(ModuleOutput::nothing("no significant water bodies")),
            }
        })
        .depends_on([WATER_PREPROCESSING])
    };

    let water_rgb_mod = {
        let (corpus, chat) = (corpus.clone(), chat.clone());
        ModuleSpec::new(WATER_RGB, move |ctx| {
            let Some(water_text) = ctx.store.text(WATER_ANALYSIS_FILE) else {
                return Ok(ModuleOutput::nothing(
                    "no water analysis, rgb analysis unchanged",
                ));
            };
            let t = apply_water_modification(
                image(ctx, RGB_FILE)?,
                text(ctx, RGB_ANALYSIS_FILE)?,
                water_text,
                &corpus,
                &chat,
            )?;
            Ok(ModuleOutput::with(vec![Artifact::text(
                RGB_ANALYSIS_FILE,
                t.rendered,
            )]))
        })
        .depends_on([WATER_ANALYSIS, RGB_ANALYSIS])
        .revises(RGB_ANALYSIS_FILE)
    };

    let report_mod = {
        let (corpus, chat, location) = (corpus.clone(), chat.clone(), location.clone());
        ModuleSpec::new(CLIMATE_REPORT, move |ctx| {
            let t = generate_climate_report(
                &location,
                text(ctx, RGB_ANALYSIS_FILE)?,
                text(ctx, MOISTURE_ANALYSIS_FILE)?,
                &corpus,
                &chat,
            )?;
            Ok(ModuleOutput::with(vec![Artifact::text(
                CLIMATE_REPORT_FILE,
                t.rendered,
            )]))
        })
        .depends_on([RGB_ANALYSIS, MOISTURE_ANALYSIS])
        .soft_depends_on([WATER_RGB])
    };

    let downstream_mod = ModuleSpec::new(DOWNSTREAM_PROMPT, move |ctx| {
        let p = assemble_downstream_prompt(text(ctx, CLIMATE_REPORT_FILE)?, &location)?;
        Ok(ModuleOutput::with(vec![Artifact::text(
            DOWNSTREAM_PROMPT_FILE,
            p,
        )]))
    })
    .depends_on([CLIMATE_REPORT]);

    vec![
        loader_mod,
        rgb_mod,
        moisture_mod,
        preprocess_mod,
        water_mod,
        water_rgb_mod,
        report_mod,
        downstream_mod,
    ]
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use image::{GrayImage, Luma, Rgb, RgbImage};

    use super::*;
    use crate::llm::StubBackend;
    use crate::pipeline::{execute, resolve_order, ArtifactStore, ModuleStatus};
    use crate::satellite::ImageSource;

    fn fixture(water_cols: u32) -> ImageLoader {
        Arc::new(move |loc: &str| {
            Ok(ImageSet::new(
                RgbImage::from_pixel(40, 30, Rgb([90, 110, 70])),
                RgbImage::from_fn(40, 30, |x, _| Rgb([(x * 6) as u8, 255, 255])),
                GrayImage::from_fn(40, 30, |x, _| Luma([if x < water_cols { 230 } else { 10 }])),
                ImageSource::Manual,
                loc,
                1024,
            ))
        })
    }

    fn modules(water_cols: u32) -> Vec<ModuleSpec> {
        build_modules(AnalysisInputs {
            location: "Roßtal".into(),
            loader: fixture(water_cols),
            corpus: Arc::new(PromptCorpus::shipped().unwrap()),
            chat: ChatSetup::new(Arc::new(StubBackend)),
            water: WaterParams::default(),
        })
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn declared_graph_is_literal() {
        let ms = modules(0);
        let find = |id: &str| ms.iter().find(|m| m.id == id).unwrap();
        assert_eq!(ms.len(), 8);
        for id in [RGB_ANALYSIS, MOISTURE_ANALYSIS, WATER_PREPROCESSING] {
            assert_eq!(find(id).deps, set(&[SATELLITE_LOADER]));
        }
        assert_eq!(find(WATER_ANALYSIS).deps, set(&[WATER_PREPROCESSING]));
        assert_eq!(find(WATER_RGB).deps, set(&[WATER_ANALYSIS, RGB_ANALYSIS]));
        assert_eq!(
            find(CLIMATE_REPORT).deps,
            set(&[RGB_ANALYSIS, MOISTURE_ANALYSIS])
        );
        assert_eq!(find(CLIMATE_REPORT).soft_deps, set(&[WATER_RGB]));
        assert_eq!(find(DOWNSTREAM_PROMPT).deps, set(&[CLIMATE_REPORT]));
        assert!(ms
            .iter()
            .filter(|m| m.id != CLIMATE_REPORT)
            .all(|m| m.soft_deps.is_empty()));
    }

    #[test]
    fn with_water_rgb_analysis_gets_two_versions() {
        let ms = modules(12);
        let mut store = ArtifactStore::new();
        let report = execute(&ms, &resolve_order(&ms).unwrap(), &mut store);
        assert!(
            report.statuses.values().all(ModuleStatus::succeeded),
            "{report:?}"
        );
        assert_eq!(store.versions(RGB_ANALYSIS_FILE).len(), 2);
        assert!(store.contains(WATER_ANALYSIS_FILE));
        assert!(store.text(CLIMATE_REPORT_FILE).unwrap().contains("Roßtal"));
    }

    #[test]
    fn without_water_modification_is_a_no_op() {
        let ms = modules(0);
        let mut store = ArtifactStore::new();
        let report = execute(&ms, &resolve_order(&ms).unwrap(), &mut store);
        assert!(
            report.statuses.values().all(ModuleStatus::succeeded),
            "{report:?}"
        );
        assert_eq!(store.versions(RGB_ANALYSIS_FILE).len(), 1);
        assert!(!store.contains(WATER_ANALYSIS_FILE));
        assert!(store.contains(DOWNSTREAM_PROMPT_FILE));
    }
}
