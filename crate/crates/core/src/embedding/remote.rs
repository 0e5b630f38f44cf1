use serde_json::{json, Value};

use super::{Embedder, EmbedderKind, EmbedderSpec, EmbeddingError, EmbeddingVector};
use crate::http::{bearer_from_env, post_json, RetryPolicy};

/// Client for an HTTP embedding service.
///
/// Sends `{"input": text, "model": model_id}` and accepts a bare JSON array,
/// an object with an `embedding` array, or an OpenAI-style
/// `{"data": [{"embedding": [...]}]}` body. The returned vector is passed
/// through unchanged apart from a dimension check.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    spec: EmbedderSpec,
    client: reqwest::blocking::Client,
    api_key_env: String,
    retry: RetryPolicy,
}

impl RemoteEmbedder {
    pub const DEFAULT_API_KEY_ENV: &'static str = "EMBEDDING_API_KEY";

    pub fn from_spec(spec: EmbedderSpec) -> Result<Self, EmbeddingError> {
        spec.validate()?;
        if spec.kind != EmbedderKind::Remote {
            return Err(EmbeddingError::InvalidSpec("not a remote spec".into()));
        }
        Ok(Self {
            spec,
            client: reqwest::blocking::Client::new(),
            api_key_env: Self::DEFAULT_API_KEY_ENV.to_owned(),
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_api_key_env(mut self, env_var: impl Into<String>) -> Self {
        self.api_key_env = env_var.into();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn endpoint(&self) -> &str {
        self.spec.remote_endpoint.as_deref().unwrap_or_default()
    }
}

fn extract_vector(body: &Value) -> Option<Vec<f64>> {
    let array = match body {
        Value::Array(_) => body,
        Value::Object(map) => map
            .get("embedding")
            .or_else(|| map.get("data")?.get(0)?.get("embedding"))?,
        _ => return None,
    };
    array.as_array()?.iter().map(Value::as_f64).collect()
}

impl Embedder for RemoteEmbedder {
    fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        let body = json!({
            "input": text,
            "model": self.spec.remote_model_id,
        });
        let token = bearer_from_env(&self.api_key_env);
        let response = post_json(&self.client, self.endpoint(), token.as_deref(), &body, &self.retry)
            .map_err(|f| EmbeddingError::Backend {
                endpoint: self.endpoint().to_owned(),
                status: f.status,
                message: f.message,
            })?;
        let values = extract_vector(&response).ok_or_else(|| EmbeddingError::Backend {
            endpoint: self.endpoint().to_owned(),
            status: None,
            message: "response carries no numeric embedding array".into(),
        })?;
        if values.len() != self.spec.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                left: self.spec.dimension,
                right: values.len(),
            });
        }
        Ok(EmbeddingVector::new(values))
    }
}
