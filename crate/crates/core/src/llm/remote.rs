use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatBackend, ChatMessage, ChatRequest, LlmError, Role};
use crate::http::{HttpRequest, HttpTransport};

pub const DEFAULT_MAX_RETRIES: u32 = 3;

/// Chat-completions style HTTP backend.
///
/// Only HTTP 429 is retried, with the delay doubling from `base_delay`.
pub struct RemoteBackend {
    transport: Arc<dyn HttpTransport>,
    endpoint: String,
    token: Option<String>,
    max_retries: u32,
    base_delay: Duration,
}

impl RemoteBackend {
    pub fn new(
        transport: Arc<dyn HttpTransport>,
        endpoint: impl Into<String>,
        token: Option<String>,
    ) -> Self {
        Self {
            transport,
            endpoint: endpoint.into(),
            token,
            max_retries: DEFAULT_MAX_RETRIES,
            base_delay: Duration::from_millis(500),
        }
    }

    pub fn with_retry(mut self, max_retries: u32, base_delay: Duration) -> Self {
        self.max_retries = max_retries;
        self.base_delay = base_delay;
        self
    }

    fn message_json(m: &ChatMessage) -> Value {
        if m.images.is_empty() || m.role != Role::User {
            return json!({"role": m.role.as_str(), "content": m.text});
        }
        let mut parts = vec![json!({"type": "text", "text": m.text})];
        parts.extend(
            m.images
                .iter()
                .map(|img| json!({"type": "image_url", "image_url": {"url": img.data_url()}})),
        );
        json!({"role": m.role.as_str(), "content": parts})
    }

    pub fn request_body(request: &ChatRequest) -> Value {
        let mut body = json!({
            "model": request.model,
            "messages": request.messages.iter().map(Self::message_json).collect::<Vec<_>>(),
            "temperature": request.params.temperature,
        });
        if let Some(n) = request.params.max_tokens {
            body["max_tokens"] = json!(n);
        }
        body
    }

    fn parse_reply(body: &[u8]) -> Result<String, LlmError> {
        let v: Value =
            serde_json::from_slice(body).map_err(|e| LlmError::MalformedReply(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| LlmError::MalformedReply("missing choices[0].message.content".into()))
    }
}

impl ChatBackend for RemoteBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        if request
            .messages
            .iter()
            .any(|m| m.role == Role::System && !m.images.is_empty())
        {
            return Err(LlmError::InvalidMessage(
                "system messages cannot carry images".into(),
            ));
        }
        let mut http = HttpRequest::post_json(&self.endpoint, &Self::request_body(request));
        if let Some(t) = &self.token {
            http = http.bearer(t);
        }
        let mut attempts = 0;
        loop {
            attempts += 1;
            let response = self
                .transport
                .execute(&http)
                .map_err(|e| LlmError::Transport(e.to_string()))?;
            if response.status == 429 {
                if attempts > self.max_retries {
                    return Err(LlmError::RateLimited { attempts });
                }
                let delay = self.base_delay.saturating_mul(1 << (attempts - 1).min(16));
                log::warn!("chat backend rate limited, retrying in {delay:?}");
                std::thread::sleep(delay);
                continue;
            }
            if !response.is_success() {
                return Err(LlmError::Status {
                    status: response.status,
                    message: String::from_utf8_lossy(&response.body)
                        .chars()
                        .take(200)
                        .collect(),
                });
            }
            return Self::parse_reply(&response.body);
        }
    }

    fn name(&self) -> &str {
        "remote"
    }

    fn is_configured(&self) -> bool {
        !self.endpoint.trim().is_empty()
    }
}
