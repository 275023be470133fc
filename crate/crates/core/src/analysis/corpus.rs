use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const RGB_CORPUS_FILE: &str = "rgb_analysis.json";
pub const MOISTURE_CORPUS_FILE: &str = "moisture_analysis.json";
pub const WATER_CORPUS_FILE: &str = "water_analysis.json";
pub const REPORT_CORPUS_FILE: &str = "climate_report.json";
pub const MODIFICATION_CORPUS_FILE: &str = "water_rgb_modification.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// SHA-256 over each file's texts joined with `\n`, system prompt first.
pub const PINNED_DIGESTS: [(&str, &str); 5] = [
    (
        RGB_CORPUS_FILE,
        "69c77494f2d31771e9f9ae8204f6571f4dbe368614efa3521cf5ab5904f5b34e",
    ),
    (
        MOISTURE_CORPUS_FILE,
        "4c7f0109cc3ce5ed2daf96359f246f0257a16dadb75ede1b55e95ddbb67abd84",
    ),
    (
        WATER_CORPUS_FILE,
        "04a144444b52977354de81df0fe30e00b474f46da96932f79ce67a6549dffc25",
    ),
    (
        REPORT_CORPUS_FILE,
        "9b27aaaa0101b50330d059ac768bae1d82658f817ddc032b4b8c60959227f81f",
    ),
    (
        MODIFICATION_CORPUS_FILE,
        "c31cc123a8942f5ae83e087a784ade87f18bad4eab79101f929eac079ba2a5df",
    ),
];

const SHIPPED: [(&str, &str); 6] = [
    (
        RGB_CORPUS_FILE,
        include_str!("../../corpus/rgb_analysis.json"),
    ),
    (
        MOISTURE_CORPUS_FILE,
        include_str!("../../corpus/moisture_analysis.json"),
    ),
    (
        WATER_CORPUS_FILE,
        include_str!("../../corpus/water_analysis.json"),
    ),
    (
        REPORT_CORPUS_FILE,
        include_str!("../../corpus/climate_report.json"),
    ),
    (
        MODIFICATION_CORPUS_FILE,
        include_str!("../../corpus/water_rgb_modification.json"),
    ),
    (MANIFEST_FILE, include_str!("../../corpus/manifest.json")),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("prompt corpus file missing: {0:?}")]
    MissingCorpus(PathBuf),
    #[error("prompt corpus file {file} is malformed: {message}")]
    Malformed { file: String, message: String },
    #[error("prompt corpus file {file} has {found} user prompts, expected {expected}")]
    WrongCount {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("prompt corpus file {file} drifted: sha256 {found}, expected {expected}")]
    ChecksumMismatch {
        file: String,
        expected: String,
        found: String,
    },
}

/// `Artifact` marks prompt text written for this tool rather than taken from
/// the published prompt set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Published,
    Artifact,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    #[allow(dead_code)]
    stage: String,
    origin: Origin,
    #[serde(default)]
    system: Option<String>,
    user: Vec<String>,
}

impl CorpusFile {
    fn digest(&self) -> String {
        let texts: Vec<&str> = self
            .system
            .iter()
            .chain(&self.user)
            .map(String::as_str)
            .collect();
        Sha256::digest(texts.join("\n").as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    origin: Origin,
    sha256: String,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    files: BTreeMap<String, ManifestEntry>,
}

/// The verbatim prompt tables plus the modification template.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptCorpus {
    pub rgb_prompts: Vec<String>,
    pub moisture_prompts: Vec<String>,
    pub water_system: String,
    pub water_user_prompts: Vec<String>,
    pub report_system: String,
    pub report_user_templates: Vec<String>,
    pub modification_template: String,
}

/// Reads and validates `<dir>/*.json` against the manifest and the pinned digests.
pub fn load_prompt_corpus(dir: &Path) -> Result<PromptCorpus, CorpusError> {
    PromptCorpus::from_reader(|name| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|_| CorpusError::MissingCorpus(path))
    })
}

impl PromptCorpus {
    /// The corpus compiled into the binary.
    pub fn shipped() -> Result<Self, CorpusError> {
        Self::from_reader(|name| {
            SHIPPED
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, s)| s.to_string())
                .ok_or_else(|| CorpusError::MissingCorpus(PathBuf::from(name)))
        })
    }

    /// Writes the shipped corpus files into `dir`.
    pub fn write_shipped(dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in SHIPPED {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }

    fn from_reader(
        read: impl Fn(&str) -> Result<String, CorpusError>,
    ) -> Result<Self, CorpusError> {
        let manifest: Manifest =
            serde_json::from_str(&read(MANIFEST_FILE)?).map_err(|e| CorpusError::Malformed {
                file: MANIFEST_FILE.into(),
                message: e.to_string(),
            })?;
        let load = |name: &str, system: bool, count: usize| -> Result<CorpusFile, CorpusError> {
            let file: CorpusFile =
                serde_json::from_str(&read(name)?).map_err(|e| CorpusError::Malformed {
                    file: name.into(),
                    message: e.to_string(),
                })?;
            if file.system.is_some() != system {
                return Err(CorpusError::Malformed {
                    file: name.into(),
                    message: format!(
                        "system prompt {}",
                        if system { "missing" } else { "unexpected" }
                    ),
                });
            }
            if file.user.len() != count {
                return Err(CorpusError::WrongCount {
                    file: name.into(),
                    expected: count,
                    found: file.user.len(),
                });
            }
            let found = file.digest();
            let pinned = PINNED_DIGESTS
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, d)| *d);
            let entry = manifest.files.get(name);
            for expected in [pinned, entry.map(|e| e.sha256.as_str())] {
                let expected = expected.unwrap_or("<unlisted>");
                if expected != found {
                    return Err(CorpusError::ChecksumMismatch {
                        file: name.into(),
                        expected: expected.into(),
                        found,
                    });
                }
            }
            if entry.is_some_and(|e| e.origin != file.origin) {
                return Err(CorpusError::Malformed {
                    file: name.into(),
                    message: "origin disagrees with manifest".into(),
                });
            }
            Ok(file)
        };

        let rgb = load(RGB_CORPUS_FILE, false, 14)?;
        let moisture = load(MOISTURE_CORPUS_FILE, false, 7)?;
        let water = load(WATER_CORPUS_FILE, true, 3)?;
        let report = load(REPORT_CORPUS_FILE, true, 2)?;
        let modification = load(MODIFICATION_CORPUS_FILE, false, 1)?;
        Ok(Self {
            rgb_prompts: rgb.user,
            moisture_prompts: moisture.user,
            water_system: water.system.unwrap_or_default(),
            water_user_prompts: water.user,
            report_system: report.system.unwrap_or_default(),
            report_user_templates: report.user,
            modification_template: modification.user.into_iter().next().unwrap_or_default(),
        })
    }

    /// Every text in the corpus, in file order.
    pub fn all_texts(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        out.extend(self.rgb_prompts.iter().map(String::as_str));
        out.extend(self.moisture_prompts.iter().map(String::as_str));
        out.push(&self.water_system);
        out.extend(self.water_user_prompts.iter().map(String::as_str));
        out.push(&self.report_system);
        out.extend(self.report_user_templates.iter().map(String::as_str));
        out.push(&self.modification_template);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_corpus_loads() {
        let c = PromptCorpus::shipped().unwrap();
        assert_eq!(c.rgb_prompts.len(), 14);
        assert_eq!(c.moisture_prompts.len(), 7);
        assert_eq!(c.water_user_prompts.len(), 3);
        assert_eq!(c.report_user_templates.len(), 2);
        assert!(
            c.moisture_prompts[0].starts_with("List specific spots with the highest heat levels")
        );
        assert!(c.water_system.contains("water as white and land as black"));
        assert!(c.report_system.starts_with("You are a climate scientist"));
        assert!(c.report_user_templates[0].contains("{location}"));
        assert!(c.report_user_templates[1].contains("{rgb_analysis}"));
        assert!(c.report_user_templates[1].contains("{moisture_analysis}"));
    }

    #[test]
    fn loads_from_directory_and_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        PromptCorpus::write_shipped(dir.path()).unwrap();
        assert_eq!(
            load_prompt_corpus(dir.path()).unwrap(),
            PromptCorpus::shipped().unwrap()
        );

        let path = dir.path().join(RGB_CORPUS_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replacen("population", "populace", 1)).unwrap();
        assert!(matches!(
            load_prompt_corpus(dir.path()),
            Err(CorpusError::ChecksumMismatch { file, .. }) if file == RGB_CORPUS_FILE
        ));
    }

    #[test]
    fn missing_file_reported() {
        let dir = tempfile::tempdir().unwrap();
        PromptCorpus::write_shipped(dir.path()).unwrap();
        std::fs::remove_file(dir.path().join(WATER_CORPUS_FILE)).unwrap();
        assert!(matches!(
            load_prompt_corpus(dir.path()),
            Err(CorpusError::MissingCorpus(_))
        ));
    }

    #[test]
    fn dropped_prompt_is_a_count_error() {
        let dir = tempfile::tempdir().unwrap();
        PromptCorpus::write_shipped(dir.path()).unwrap();
        let path = dir.path().join(MOISTURE_CORPUS_FILE);
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        v["user"].as_array_mut().unwrap().pop();
        std::fs::write(&path, v.to_string()).unwrap();
        assert!(matches!(
            load_prompt_corpus(dir.path()),
            Err(CorpusError::WrongCount {
                expected: 7,
                found: 6,
                ..
            })
        ));
    }
}
