//! Text embeddings and cosine similarity.
//!
//! Two embedders sit behind the [`Embedder`] trait: an offline hashed
//! term-frequency embedder ([`LocalEmbedder`]) and a client for a remote
//! embedding service ([`RemoteEmbedder`]). Both are described by an
//! [`EmbedderSpec`], whose fingerprint is recorded in every vector index.

mod local;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use local::{fnv1a_64, LocalEmbedder};
pub use remote::RemoteEmbedder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("cannot embed empty text")]
    EmptyInput,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("embedding backend {endpoint} failed (status {status:?}): {message}")]
    Backend {
        endpoint: String,
        status: Option<u16>,
        message: String,
    },
    #[error("invalid embedder spec: {0}")]
    InvalidSpec(String),
}

/// A fixed-length real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    LocalDeterministic,
    Remote,
}

impl EmbedderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LocalDeterministic => "local_deterministic",
            Self::Remote => "remote",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderSpec {
    pub kind: EmbedderKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote_endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote_model_id: Option<String>,
}

impl EmbedderSpec {
    pub const DEFAULT_LOCAL_DIMENSION: usize = 256;

    pub fn local(dimension: usize) -> Self {
        Self {
            kind: EmbedderKind::LocalDeterministic,
            dimension,
            remote_endpoint: None,
            remote_model_id: None,
        }
    }

    pub fn remote(endpoint: impl Into<String>, model_id: impl Into<String>, dimension: usize) -> Self {
        Self {
            kind: EmbedderKind::Remote,
            dimension,
            remote_endpoint: Some(endpoint.into()),
            remote_model_id: Some(model_id.into()),
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.dimension == 0 {
            return Err(EmbeddingError::InvalidSpec("dimension must be positive".into()));
        }
        let has_remote = self.remote_endpoint.is_some() && self.remote_model_id.is_some();
        let has_any = self.remote_endpoint.is_some() || self.remote_model_id.is_some();
        match self.kind {
            EmbedderKind::Remote if !has_remote => Err(EmbeddingError::InvalidSpec(
                "remote embedder needs an endpoint and a model id".into(),
            )),
            EmbedderKind::LocalDeterministic if has_any => Err(EmbeddingError::InvalidSpec(
                "local embedder takes no endpoint or model id".into(),
            )),
            _ => Ok(()),
        }
    }

    /// `kind:dimension:model`, e.g. `local_deterministic:256:-`.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}:{}:{}",
            self.kind.as_str(),
            self.dimension,
            self.remote_model_id.as_deref().unwrap_or("-")
        )
    }
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        Self::local(Self::DEFAULT_LOCAL_DIMENSION)
    }
}

pub trait Embedder: Send + Sync {
    fn spec(&self) -> &EmbedderSpec;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError>;

    fn fingerprint(&self) -> String {
        self.spec().fingerprint()
    }
}

/// Instantiates the embedder a spec describes.
pub fn embedder_from_spec(spec: &EmbedderSpec) -> Result<Box<dyn Embedder>, EmbeddingError> {
    spec.validate()?;
    Ok(match spec.kind {
        EmbedderKind::LocalDeterministic => Box::new(LocalEmbedder::new(spec.dimension)?),
        EmbedderKind::Remote => Box::new(RemoteEmbedder::from_spec(spec.clone())?),
    })
}

/// One-shot embedding of `text` with the embedder described by `spec`.
pub fn embed_text(text: &str, spec: &EmbedderSpec) -> Result<EmbeddingVector, EmbeddingError> {
    embedder_from_spec(spec)?.embed(text)
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
///
/// Summation runs in index order, so the result is exactly symmetric.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.values().iter().zip(b.values()) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    let raw = dot / (norm_a.sqrt() * norm_b.sqrt());
    debug_assert!(!raw.is_finite() || raw.abs() <= 1.0 + 1e-9, "cosine {raw} out of range");
    Ok(raw.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec())
    }

    #[test]
    fn self_similarity_is_one() {
        let a = v(&[0.3, -1.2, 4.0]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn orthogonal_vectors() {
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn worked_example() {
        // 32 / (sqrt(14) * sqrt(77))
        let expected = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        let got = cosine_similarity(&v(&[1.0, 2.0, 3.0]), &v(&[4.0, 5.0, 6.0])).unwrap();
        assert!((got - expected).abs() <= 1e-12);
        assert!((got - 0.974631846).abs() <= 1e-9);
    }

    #[test]
    fn errors() {
        assert_eq!(
            cosine_similarity(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(EmbeddingError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 2.0])), Err(EmbeddingError::ZeroVector));
    }

    #[test]
    fn spec_validation_and_fingerprint() {
        assert_eq!(EmbedderSpec::default().fingerprint(), "local_deterministic:256:-");
        let remote = EmbedderSpec::remote("http://x/embed", "m1", 8);
        assert_eq!(remote.fingerprint(), "remote:8:m1");
        assert!(remote.validate().is_ok());
        let mut bad = EmbedderSpec::local(8);
        bad.remote_model_id = Some("m".into());
        assert!(bad.validate().is_err());
        let mut bad = remote;
        bad.remote_endpoint = None;
        assert!(bad.validate().is_err());
        assert!(EmbedderSpec::local(0).validate().is_err());
    }

    fn nonzero_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..32).prop_flat_map(|n| {
            (
                prop::collection::vec(-1e3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            )
        })
        .prop_filter("non-zero", |(a, b)| a.iter().any(|x| *x != 0.0) && b.iter().any(|x| *x != 0.0))
    }

    proptest! {
        #[test]
        fn symmetric_scale_invariant_and_bounded((a, b) in nonzero_pair(), alpha in 1e-3f64..1e3) {
            let (va, vb) = (v(&a), v(&b));
            let ab = cosine_similarity(&va, &vb).unwrap();
            let ba = cosine_similarity(&vb, &va).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!((-1.0..=1.0).contains(&ab));
            let scaled = v(&a.iter().map(|x| x * alpha).collect::<Vec<_>>());
            prop_assert!((cosine_similarity(&scaled, &vb).unwrap() - ab).abs() <= 1e-9);
        }
    }
}
