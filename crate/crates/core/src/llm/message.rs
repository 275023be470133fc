use std::io::Cursor;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use image::DynamicImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// Encoded image bytes attached to a user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageAttachment {
    mime: String,
    bytes: Arc<[u8]>,
}

impl ImageAttachment {
    pub fn png(bytes: impl Into<Arc<[u8]>>) -> Self {
        Self {
            mime: "image/png".into(),
            bytes: bytes.into(),
        }
    }

    pub fn from_image(image: &DynamicImage) -> Result<Self, image::ImageError> {
        let mut buf = Cursor::new(Vec::new());
        image.write_to(&mut buf, image::ImageFormat::Png)?;
        Ok(Self::png(buf.into_inner()))
    }

    pub fn mime(&self) -> &str {
        &self.mime
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn data_url(&self) -> String {
        use base64::Engine;
        format!(
            "data:{};base64,{}",
            self.mime,
            base64::engine::general_purpose::STANDARD.encode(&self.bytes)
        )
    }

    /// First 12 hex digits of the SHA-256 of the encoded bytes.
    pub fn short_digest(&self) -> String {
        hex12(&Sha256::digest(&self.bytes))
    }
}

pub(crate) fn hex12(digest: &[u8]) -> String {
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
    pub images: Vec<ImageAttachment>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn user(text: impl Into<String>, images: Vec<ImageAttachment>) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
            images,
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            text: text.into(),
            images: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingParams {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: None,
        }
    }
}

/// Process-unique identity of a chat session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SessionId(u64);

impl SessionId {
    pub(crate) fn next() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        SessionId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

/// One backend call: the whole conversation so far, ending with the new
/// user message.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub session: SessionId,
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub params: DecodingParams,
}

impl ChatRequest {
    pub fn system_prompt(&self) -> Option<&str> {
        self.messages
            .first()
            .filter(|m| m.role == Role::System)
            .map(|m| m.text.as_str())
    }

    pub fn last_user(&self) -> Option<&ChatMessage> {
        self.messages.last().filter(|m| m.role == Role::User)
    }

    /// Messages between the system head and the final user message.
    pub fn history(&self) -> &[ChatMessage] {
        let start = usize::from(self.system_prompt().is_some());
        let end = self.messages.len().saturating_sub(1).max(start);
        &self.messages[start..end]
    }
}
