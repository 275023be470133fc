//! Multimodal chat abstraction.
//!
//! A [`ChatSession`] pins an optional system prompt and accumulates the
//! user/assistant history; every [`ChatSession::send`] hands the full
//! conversation to a [`ChatBackend`]. Two backends ship: [`RemoteBackend`]
//! for chat-completions style HTTP services and [`StubBackend`], a pure
//! function of its inputs for offline runs and tests.

mod message;
mod recording;
mod remote;
mod session;
mod stub;

use thiserror::Error;

pub use message::{ChatMessage, ChatRequest, DecodingParams, ImageAttachment, Role, SessionId};
pub use recording::RecordingBackend;
pub use remote::{RemoteBackend, DEFAULT_MAX_RETRIES};
pub use session::{open_session, ChatSession};
pub use stub::{stub_reply, StubBackend, STUB_TAG};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("chat backend not configured: {0}")]
    BackendUnconfigured(String),
    #[error("chat transport failure: {0}")]
    Transport(String),
    #[error("chat backend rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("chat backend returned HTTP {status}: {message}")]
    Status { status: u16, message: String },
    #[error("malformed chat reply: {0}")]
    MalformedReply(String),
    #[error("invalid chat message: {0}")]
    InvalidMessage(String),
}

pub trait ChatBackend: Send + Sync {
    /// Produces the assistant reply for the full conversation in `request`.
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;

    fn name(&self) -> &str;

    fn is_configured(&self) -> bool {
        true
    }
}
