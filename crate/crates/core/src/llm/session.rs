use std::sync::Arc;

use super::{
    ChatBackend, ChatMessage, ChatRequest, DecodingParams, ImageAttachment, LlmError, SessionId,
};

/// One conversation: an optional pinned system prompt plus alternating
/// user/assistant turns.
pub struct ChatSession {
    id: SessionId,
    backend: Arc<dyn ChatBackend>,
    system: Option<String>,
    history: Vec<ChatMessage>,
    model_name: String,
    params: DecodingParams,
}

pub fn open_session(
    backend: Arc<dyn ChatBackend>,
    system: Option<&str>,
    model_name: &str,
) -> Result<ChatSession, LlmError> {
    ChatSession::open(backend, system, model_name, DecodingParams::default())
}

impl ChatSession {
    pub fn open(
        backend: Arc<dyn ChatBackend>,
        system: Option<&str>,
        model_name: &str,
        params: DecodingParams,
    ) -> Result<Self, LlmError> {
        if !backend.is_configured() {
            return Err(LlmError::BackendUnconfigured(format!(
                "backend {:?} has no endpoint",
                backend.name()
            )));
        }
        if model_name.trim().is_empty() {
            return Err(LlmError::BackendUnconfigured("model name is empty".into()));
        }
        Ok(Self {
            id: SessionId::next(),
            backend,
            system: system.map(str::to_owned),
            history: Vec::new(),
            model_name: model_name.to_owned(),
            params,
        })
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn system(&self) -> Option<&str> {
        self.system.as_deref()
    }

    pub fn history(&self) -> &[ChatMessage] {
        &self.history
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    /// Sends one user turn and records it with the reply. History is left
    /// untouched when the backend fails.
    pub fn send(&mut self, text: &str, images: Vec<ImageAttachment>) -> Result<String, LlmError> {
        let mut messages = Vec::with_capacity(self.history.len() + 2);
        if let Some(s) = &self.system {
            messages.push(ChatMessage::system(s.clone()));
        }
        messages.extend(self.history.iter().cloned());
        messages.push(ChatMessage::user(text, images));
        let request = ChatRequest {
            session: self.id,
            model: self.model_name.clone(),
            messages,
            params: self.params.clone(),
        };
        let reply = self.backend.complete(&request)?;
        let user = request
            .messages
            .into_iter()
            .next_back()
            .expect("user message pushed above");
        self.history.push(user);
        self.history.push(ChatMessage::assistant(reply.clone()));
        Ok(reply)
    }
}
