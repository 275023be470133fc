use std::fmt;
use std::sync::Arc;

use image::{DynamicImage, GrayImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::PromptCorpus;
use crate::llm::{ChatBackend, ChatSession, DecodingParams, ImageAttachment, LlmError};
use crate::raster::{water_fraction, BinaryMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnalysisStage {
    Rgb,
    Moisture,
    Water,
    RgbModified,
    Report,
}

impl fmt::Display for AnalysisStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalysisStage::Rgb => "rgb analysis",
            AnalysisStage::Moisture => "moisture analysis",
            AnalysisStage::Water => "water analysis",
            AnalysisStage::RgbModified => "water/rgb modification",
            AnalysisStage::Report => "climate report",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("{stage}: input image is empty")]
    EmptyImage { stage: AnalysisStage },
    #[error("{stage}: cannot encode image: {message}")]
    ImageEncoding {
        stage: AnalysisStage,
        message: String,
    },
    #[error("{stage}: template placeholder {{{placeholder}}} has no input")]
    MissingPlaceholderInput {
        stage: AnalysisStage,
        placeholder: String,
    },
    #[error("{stage}: location is empty")]
    EmptyLocation { stage: AnalysisStage },
    #[error("{stage}, prompt {prompt_index}: {source}")]
    Backend {
        stage: AnalysisStage,
        prompt_index: usize,
        #[source]
        source: LlmError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub prompt: String,
    pub reply: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisText {
    pub stage: AnalysisStage,
    pub sections: Vec<Section>,
    pub rendered: String,
}

impl AnalysisText {
    /// Renders replies as `## Prompt N` blocks in prompt order.
    fn numbered(stage: AnalysisStage, sections: Vec<Section>) -> Self {
        let rendered = sections
            .iter()
            .enumerate()
            .map(|(i, s)| format!("## Prompt {}\n\n{}\n", i + 1, s.reply))
            .collect::<Vec<_>>()
            .join("\n");
        Self {
            stage,
            sections,
            rendered,
        }
    }
}

/// Model names per stage, matching the per-node labels of the module graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageModels {
    pub rgb_model: String,
    pub water_model: String,
    pub moisture_model: String,
    pub report_model: String,
}

impl Default for StageModels {
    fn default() -> Self {
        Self {
            rgb_model: "360VL".into(),
            water_model: "360VL".into(),
            moisture_model: "360VL".into(),
            report_model: "InternLM".into(),
        }
    }
}

/// Backend handle plus the per-stage model choice.
#[derive(Clone)]
pub struct ChatSetup {
    pub backend: Arc<dyn ChatBackend>,
    pub models: StageModels,
    pub params: DecodingParams,
}

impl ChatSetup {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            models: StageModels::default(),
            params: DecodingParams::default(),
        }
    }

    fn session(
        &self,
        stage: AnalysisStage,
        system: Option<&str>,
        model: &str,
    ) -> Result<ChatSession, StageError> {
        ChatSession::open(self.backend.clone(), system, model, self.params.clone()).map_err(
            |source| StageError::Backend {
                stage,
                prompt_index: 1,
                source,
            },
        )
    }
}

fn attach(stage: AnalysisStage, image: &DynamicImage) -> Result<ImageAttachment, StageError> {
    if image.width() == 0 || image.height() == 0 {
        return Err(StageError::EmptyImage { stage });
    }
    ImageAttachment::from_image(image).map_err(|e| StageError::ImageEncoding {
        stage,
        message: e.to_string(),
    })
}

/// One fresh session per prompt, the same image attached to each.
fn independent_exchanges(
    stage: AnalysisStage,
    setup: &ChatSetup,
    system: Option<&str>,
    model: &str,
    prompts: &[String],
    image: &DynamicImage,
) -> Result<AnalysisText, StageError> {
    let attachment = attach(stage, image)?;
    let mut sections = Vec::with_capacity(prompts.len());
    for (i, prompt) in prompts.iter().enumerate() {
        let mut session = setup.session(stage, system, model)?;
        let reply = session
            .send(prompt, vec![attachment.clone()])
            .map_err(|source| StageError::Backend {
                stage,
                prompt_index: i + 1,
                source,
            })?;
        sections.push(Section {
            prompt: prompt.clone(),
            reply,
        });
    }
    Ok(AnalysisText::numbered(stage, sections))
}

pub fn run_rgb_analysis(
    rgb: &DynamicImage,
    corpus: &PromptCorpus,
    setup: &ChatSetup,
) -> Result<AnalysisText, StageError> {
    independent_exchanges(
        AnalysisStage::Rgb,
        setup,
        None,
        &setup.models.rgb_model,
        &corpus.rgb_prompts,
        rgb,
    )
}

pub fn run_moisture_analysis(
    moisture: &DynamicImage,
    corpus: &PromptCorpus,
    setup: &ChatSetup,
) -> Result<AnalysisText, StageError> {
    independent_exchanges(
        AnalysisStage::Moisture,
        setup,
        None,
        &setup.models.moisture_model,
        &corpus.moisture_prompts,
        moisture,
    )
}

/// Three independent chats sharing the water system prompt, or `None` when
/// the mask's water fraction is below `significance_cutoff`.
pub fn run_water_analysis(
    water_preprocessed: &GrayImage,
    significance_cutoff: f64,
    corpus: &PromptCorpus,
    setup: &ChatSetup,
) -> Result<Option<AnalysisText>, StageError> {
    let fraction = water_fraction(&BinaryMask::from_gray(water_preprocessed));
    if fraction < significance_cutoff {
        log::info!(
            "water fraction {fraction} below {significance_cutoff}, skipping water analysis"
        );
        return Ok(None);
    }
    let image = DynamicImage::ImageLuma8(water_preprocessed.clone());
    independent_exchanges(
        AnalysisStage::Water,
        setup,
        Some(&corpus.water_system),
        &setup.models.water_model,
        &corpus.water_user_prompts,
        &image,
    )
    .map(Some)
}

/// Substitutes `{key}` placeholders. Every placeholder named in `values`
/// that occurs in the template must have a non-blank value.
pub fn fill_template(
    stage: AnalysisStage,
    template: &str,
    values: &[(&str, &str)],
) -> Result<String, StageError> {
    let mut out = template.to_owned();
    for (key, value) in values {
        let token = format!("{{{key}}}");
        if !out.contains(&token) {
            continue;
        }
        if value.trim().is_empty() {
            return Err(StageError::MissingPlaceholderInput {
                stage,
                placeholder: (*key).to_owned(),
            });
        }
        out = out.replace(&token, value);
    }
    Ok(out)
}

/// Revised RGB analysis that folds in the water findings.
pub fn apply_water_modification(
    rgb: &DynamicImage,
    rgb_text: &str,
    water_text: &str,
    corpus: &PromptCorpus,
    setup: &ChatSetup,
) -> Result<AnalysisText, StageError> {
    let stage = AnalysisStage::RgbModified;
    let attachment = attach(stage, rgb)?;
    let prompt = fill_template(
        stage,
        &corpus.modification_template,
        &[("water_analysis", water_text), ("rgb_analysis", rgb_text)],
    )?;
    let mut session = setup.session(stage, None, &setup.models.rgb_model)?;
    let reply = session
        .send(&prompt, vec![attachment])
        .map_err(|source| StageError::Backend {
            stage,
            prompt_index: 1,
            source,
        })?;
    let rendered = format!("{reply}\n");
    Ok(AnalysisText {
        stage,
        sections: vec![Section { prompt, reply }],
        rendered,
    })
}

pub fn report_header(location: &str) -> String {
    format!("# Climate Report: {location}\n\n")
}

/// Two turns in one session under the report system prompt. The rendered
/// text is a title line naming the location followed by the final reply.
pub fn generate_climate_report(
    location: &str,
    rgb_text: &str,
    moisture_text: &str,
    corpus: &PromptCorpus,
    setup: &ChatSetup,
) -> Result<AnalysisText, StageError> {
    let stage = AnalysisStage::Report;
    if location.trim().is_empty() {
        return Err(StageError::EmptyLocation { stage });
    }
    let values = [
        ("location", location),
        ("rgb_analysis", rgb_text),
        ("moisture_analysis", moisture_text),
    ];
    let prompts = corpus
        .report_user_templates
        .iter()
        .map(|t| fill_template(stage, t, &values))
        .collect::<Result<Vec<_>, _>>()?;
    let mut session = setup.session(
        stage,
        Some(&corpus.report_system),
        &setup.models.report_model,
    )?;
    let mut sections = Vec::with_capacity(prompts.len());
    for (i, prompt) in prompts.into_iter().enumerate() {
        let reply = session
            .send(&prompt, Vec::new())
            .map_err(|source| StageError::Backend {
                stage,
                prompt_index: i + 1,
                source,
            })?;
        sections.push(Section { prompt, reply });
    }
    let last = sections
        .last()
        .map(|s| s.reply.as_str())
        .unwrap_or_default();
    let rendered = format!("{}{last}\n", report_header(location));
    Ok(AnalysisText {
        stage,
        sections,
        rendered,
    })
}

/// Framing line plus the full report, ready to paste into a general chat
/// assistant.
pub fn assemble_downstream_prompt(report: &str, location: &str) -> Result<String, StageError> {
    if location.trim().is_empty() {
        return Err(StageError::EmptyLocation {
            stage: AnalysisStage::Report,
        });
    }
    Ok(format!(
        "Develop a climate adaptation strategy for {location}. Base it on the following climate report.\n\n{report}"
    ))
}
