use std::collections::BTreeSet;
use std::sync::Mutex;

use super::{ChatBackend, ChatRequest, LlmError, SessionId};

/// Wraps a backend and keeps a copy of every request it forwards.
pub struct RecordingBackend<B> {
    inner: B,
    requests: Mutex<Vec<ChatRequest>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().expect("request log poisoned").clone()
    }

    pub fn session_count(&self) -> usize {
        self.requests
            .lock()
            .expect("request log poisoned")
            .iter()
            .map(|r| r.session)
            .collect::<BTreeSet<SessionId>>()
            .len()
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.requests
            .lock()
            .expect("request log poisoned")
            .push(request.clone());
        self.inner.complete(request)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn is_configured(&self) -> bool {
        self.inner.is_configured()
    }
}
