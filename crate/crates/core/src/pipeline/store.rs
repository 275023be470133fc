use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Text(String),
    Image(DynamicImage),
}

impl Payload {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Payload::Text(t) => Some(t),
            Payload::Image(_) => None,
        }
    }

    pub fn as_image(&self) -> Option<&DynamicImage> {
        match self {
            Payload::Image(i) => Some(i),
            Payload::Text(_) => None,
        }
    }
}

/// A named output of one module.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub payload: Payload,
}

impl Artifact {
    pub fn text(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            payload: Payload::Text(text.into()),
        }
    }

    pub fn image(name: impl Into<String>, image: impl Into<DynamicImage>) -> Self {
        Self {
            name: name.into(),
            payload: Payload::Image(image.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactVersion {
    pub payload: Payload,
    pub producer: String,
    /// Logical write timestamp: position in the run's write sequence.
    pub seq: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("artifact {name:?} already written by {existing_producer:?}; {producer:?} may not overwrite it")]
    Overwrite {
        name: String,
        existing_producer: String,
        producer: String,
    },
}

/// Run-scoped map of artifacts. Each name is written once, except by a
/// module that declares it as a revision; every version is kept and readers
/// see the latest.
#[derive(Debug, Default, Clone)]
pub struct ArtifactStore {
    artifacts: BTreeMap<String, Vec<ArtifactVersion>>,
    next_seq: u64,
}

impl ArtifactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check_write(
        &self,
        name: &str,
        producer: &str,
        revision_allowed: bool,
    ) -> Result<(), StoreError> {
        match self.artifacts.get(name).and_then(|v| v.last()) {
            Some(existing) if !revision_allowed => Err(StoreError::Overwrite {
                name: name.to_owned(),
                existing_producer: existing.producer.clone(),
                producer: producer.to_owned(),
            }),
            _ => Ok(()),
        }
    }

    pub fn insert(
        &mut self,
        artifact: Artifact,
        producer: &str,
        revision_allowed: bool,
    ) -> Result<(), StoreError> {
        self.check_write(&artifact.name, producer, revision_allowed)?;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.artifacts
            .entry(artifact.name)
            .or_default()
            .push(ArtifactVersion {
                payload: artifact.payload,
                producer: producer.to_owned(),
                seq,
            });
        Ok(())
    }

    pub fn latest(&self, name: &str) -> Option<&ArtifactVersion> {
        self.artifacts.get(name).and_then(|v| v.last())
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.latest(name).and_then(|v| v.payload.as_text())
    }

    pub fn image(&self, name: &str) -> Option<&DynamicImage> {
        self.latest(name).and_then(|v| v.payload.as_image())
    }

    pub fn versions(&self, name: &str) -> &[ArtifactVersion] {
        self.artifacts
            .get(name)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.artifacts.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.artifacts.keys().map(String::as_str)
    }

    /// Artifact name → producer of each version, oldest first.
    pub fn manifest(&self) -> BTreeMap<String, Vec<String>> {
        self.artifacts
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|a| a.producer.clone()).collect()))
            .collect()
    }

    /// Writes the latest version of every artifact under its own name. When
    /// an artifact has several versions, each is also written as
    /// `<stem>.v<N>.<ext>`.
    pub fn mirror_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, versions) in &self.artifacts {
            let last = versions.last().expect("artifact without versions");
            written.push(write_payload(&dir.join(name), &last.payload)?);
            if versions.len() > 1 {
                for (i, v) in versions.iter().enumerate() {
                    written.push(write_payload(
                        &dir.join(versioned_name(name, i + 1)),
                        &v.payload,
                    )?);
                }
            }
        }
        Ok(written)
    }
}

pub fn versioned_name(name: &str, version: usize) -> String {
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}.v{version}.{ext}"),
        None => format!("{name}.v{version}"),
    }
}

fn write_payload(path: &Path, payload: &Payload) -> std::io::Result<PathBuf> {
    match payload {
        Payload::Text(t) => std::fs::write(path, t)?,
        Payload::Image(img) => img
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(std::io::Error::other)?,
    }
    Ok(path.to_owned())
}
