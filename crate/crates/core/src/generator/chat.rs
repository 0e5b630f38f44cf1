//! Remote chat-completion backend.

use serde_json::{json, Value};

use super::{Backend, BackendError, BackendProfile, CompletionRequest};
use crate::http::{bearer_from_env, post_json, RetryPolicy};

pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";

/// Sends one system and one user message per call and returns the first
/// choice's text. Cheap to clone; each worker may hold its own copy.
#[derive(Debug, Clone)]
pub struct ChatBackend {
    backend_id: String,
    endpoint: String,
    model: String,
    api_key_env: String,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

impl ChatBackend {
    pub fn new(backend_id: impl Into<String>, endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            backend_id: backend_id.into(),
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: DEFAULT_API_KEY_ENV.to_owned(),
            retry: RetryPolicy::default(),
            client: reqwest::blocking::Client::new(),
        }
    }

    /// `None` when the profile points at the mock backend.
    pub fn from_profile(profile: &BackendProfile) -> Option<Self> {
        profile
            .endpoint
            .url()
            .map(|url| Self::new(&profile.backend_id, url, &profile.model_name))
    }

    pub fn with_api_key_env(mut self, var: impl Into<String>) -> Self {
        self.api_key_env = var.into();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn request_body(&self, request: &CompletionRequest<'_>) -> Value {
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_message},
                {"role": "user", "content": request.prompt.text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }
}

fn first_message_text(body: &Value) -> Option<&str> {
    let choice = body.get("choices")?.get(0)?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
}

impl Backend for ChatBackend {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        let token = bearer_from_env(&self.api_key_env);
        let body = self.request_body(request);
        let response = post_json(&self.client, &self.endpoint, token.as_deref(), &body, &self.retry).map_err(|f| {
            if f.is_auth() {
                BackendError::Auth {
                    endpoint: self.endpoint.clone(),
                    message: f.message,
                }
            } else {
                BackendError::Transport {
                    endpoint: self.endpoint.clone(),
                    status: f.status,
                    attempts: f.attempts,
                    message: f.message,
                }
            }
        })?;
        first_message_text(&response)
            .map(str::to_owned)
            .ok_or_else(|| BackendError::Content {
                endpoint: self.endpoint.clone(),
                message: "response has no choices[0].message.content".into(),
            })
    }
}
