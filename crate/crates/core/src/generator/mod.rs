//! Retrieval, prompting and backend call for a single scenario.

mod chat;
mod mock;
mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use chat::{ChatBackend, DEFAULT_API_KEY_ENV};
pub use mock::{mock_backend, MockBackend};
pub use parse::{parse_scenario_output, render_scenario, ParsedScenario};

use crate::corpus::{GlossaryEntry, RequirementsSet, ScenarioRequest};
use crate::embedding::{Embedder, EmbeddingError};
use crate::prompt::{
    build_retrieval_query_with, enforce_token_budget, requirement_drop_order, AssembledPrompt, BudgetRequest,
    PromptError, PromptMode, PromptSections, PromptTemplate, DEFAULT_TOKEN_LIMIT, SAFETY_FACTOR,
};
use crate::vector_index::{IndexError, RetrievalHit, VectorIndex};

/// System message sent with every remote completion.
pub const SYSTEM_MESSAGE: &str = "You are a software test engineer.";
pub const DEFAULT_MAX_OUTPUT_TOKENS: usize = 1024;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{endpoint}: authentication failed: {message}")]
    Auth { endpoint: String, message: String },
    #[error("{endpoint}: request failed after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        status: Option<u16>,
        attempts: u32,
        message: String,
    },
    #[error("{endpoint}: unusable response: {message}")]
    Content { endpoint: String, message: String },
    #[error("no backend with id `{0}`")]
    Unknown(String),
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("invalid scenario request: {0}")]
    Request(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("prompt of {token_count} tokens exceeds budget {budget}")]
    BudgetViolated { token_count: usize, budget: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("backend output contains no steps:\n{raw_output}")]
    Parse { raw_output: String },
    #[error("provenance cannot be replayed: {0}")]
    Provenance(String),
}

/// Grants the approximate tokenizer a fraction of the backend's real limit.
pub fn default_budget(token_limit: usize) -> usize {
    ((token_limit as f64 * SAFETY_FACTOR).floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub backend_id: String,
    pub prompt_mode: PromptMode,
    pub top_k: usize,
    pub temperature: f64,
    pub token_budget: usize,
    pub backend_token_limit: usize,
    pub max_output_tokens: usize,
}

impl GenerationConfig {
    /// Temperature 0 and a budget of `floor(0.75 * backend_token_limit)`.
    pub fn new(backend_id: impl Into<String>, prompt_mode: PromptMode, top_k: usize, backend_token_limit: usize) -> Self {
        Self {
            backend_id: backend_id.into(),
            prompt_mode,
            top_k,
            temperature: 0.0,
            token_budget: default_budget(backend_token_limit),
            backend_token_limit,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }

    pub fn with_budget(mut self, token_budget: usize) -> Self {
        self.token_budget = token_budget;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let fail = |m: String| Err(GeneratorError::Config(m));
        if self.backend_id.trim().is_empty() {
            return fail("backend_id is empty".into());
        }
        if self.top_k == 0 {
            return fail("top_k must be positive".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return fail(format!("temperature {} is not a non-negative number", self.temperature));
        }
        if self.token_budget == 0 || self.backend_token_limit == 0 || self.max_output_tokens == 0 {
            return fail("token_budget, backend_token_limit and max_output_tokens must be positive".into());
        }
        if self.token_budget > self.backend_token_limit {
            return fail(format!(
                "token_budget {} exceeds backend_token_limit {}",
                self.token_budget, self.backend_token_limit
            ));
        }
        Ok(())
    }
}

/// Where a backend lives: the built-in mock or a chat-completion URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Endpoint {
    Mock,
    Url(String),
}

impl Endpoint {
    pub fn url(&self) -> Option<&str> {
        match self {
            Endpoint::Mock => None,
            Endpoint::Url(u) => Some(u),
        }
    }
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("mock") {
            Ok(Endpoint::Mock)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(Endpoint::Url(s.to_owned()))
        } else {
            Err(format!("endpoint `{s}` is neither `mock` nor an http(s) URL"))
        }
    }
}

impl TryFrom<String> for Endpoint {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Endpoint> for String {
    fn from(e: Endpoint) -> Self {
        e.to_string()
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Mock => f.write_str("mock"),
            Endpoint::Url(u) => f.write_str(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendProfile {
    pub backend_id: String,
    pub endpoint: Endpoint,
    #[serde(default)]
    pub model_name: String,
    #[serde(default = "default_token_limit")]
    pub token_limit: usize,
}

fn default_token_limit() -> usize {
    DEFAULT_TOKEN_LIMIT
}

impl BackendProfile {
    pub fn mock(backend_id: impl Into<String>) -> Self {
        Self {
            backend_id: backend_id.into(),
            endpoint: Endpoint::Mock,
            model_name: "mock".into(),
            token_limit: DEFAULT_TOKEN_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.backend_id.trim().is_empty() {
            return Err(GeneratorError::Config("backend profile without backend_id".into()));
        }
        if self.token_limit == 0 {
            return Err(GeneratorError::Config(format!("backend `{}`: token_limit must be positive", self.backend_id)));
        }
        if matches!(self.endpoint, Endpoint::Url(_)) && self.model_name.trim().is_empty() {
            return Err(GeneratorError::Config(format!("backend `{}`: model_name is required", self.backend_id)));
        }
        Ok(())
    }

    /// A fresh client for this profile.
    pub fn connect(&self) -> Box<dyn Backend> {
        match ChatBackend::from_profile(self) {
            Some(chat) => Box::new(chat),
            None => Box::new(MockBackend::new(&self.backend_id)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub system_message: &'a str,
    pub prompt: &'a AssembledPrompt,
    pub temperature: f64,
    pub max_output_tokens: usize,
}

pub trait Backend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub passage_id: String,
    pub rank: usize,
    pub similarity: f64,
}

/// Everything needed to rebuild the exact prompt and resend it.
///
/// Context passage texts are not copied; they are looked up in the index by
/// id on replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: GenerationConfig,
    pub embedder_fingerprint: String,
    pub included_k: usize,
    pub included_req_ids: Vec<String>,
    pub hits: Vec<HitRecord>,
    /// The generation prompt's sections with the context left out.
    pub sections: PromptSections,
    pub template: String,
    pub prompt_tokens: usize,
    pub prompt_sha256: String,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Provenance {
    pub fn hit_passage_ids(&self) -> Vec<&str> {
        self.hits.iter().map(|h| h.passage_id.as_str()).collect()
    }

    /// Rebuilds the prompt against `index` and checks it hashes to the
    /// recorded digest.
    pub fn rebuild_prompt(&self, index: &VectorIndex) -> Result<AssembledPrompt, GeneratorError> {
        if index.embedder_fingerprint() != self.embedder_fingerprint {
            return Err(GeneratorError::Provenance(format!(
                "index fingerprint {} differs from recorded {}",
                index.embedder_fingerprint(),
                self.embedder_fingerprint
            )));
        }
        let template = PromptTemplate::parse(self.template.clone())?;
        let mut context = Vec::with_capacity(self.hits.len());
        for h in &self.hits {
            let entry = index
                .get(&h.passage_id)
                .ok_or_else(|| GeneratorError::Provenance(format!("passage {} not in index", h.passage_id)))?;
            context.push(RetrievalHit {
                passage_id: h.passage_id.clone(),
                text: entry.text.clone(),
                similarity: h.similarity,
                rank: h.rank,
            });
        }
        let mut sections = self.sections.clone();
        sections.context = Some(context);
        let prompt = AssembledPrompt::assemble(sections, &template);
        if sha256_hex(&prompt.text) != self.prompt_sha256 {
            return Err(GeneratorError::Provenance("rebuilt prompt does not match the recorded digest".into()));
        }
        Ok(prompt)
    }

    /// Resends the recorded prompt to `backend`.
    pub fn replay(&self, index: &VectorIndex, backend: &dyn Backend) -> Result<GeneratedScenario, GeneratorError> {
        let prompt = self.rebuild_prompt(index)?;
        call_backend(&prompt, self.clone(), backend)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedScenario {
    pub title: String,
    pub steps: Vec<String>,
    pub raw_output: String,
    pub provenance: Provenance,
}

impl GeneratedScenario {
    /// Title line followed by `1.`-numbered steps.
    pub fn render(&self) -> String {
        render_scenario(&self.title, &self.steps)
    }
}

/// The fixed inputs a scenario is generated from.
#[derive(Debug, Clone, Copy)]
pub struct GenerationInputs<'a> {
    pub reqs: &'a RequirementsSet,
    pub request: &'a ScenarioRequest,
    pub glossary: &'a [GlossaryEntry],
    pub index: &'a VectorIndex,
}

/// Embeds the retrieval query, retrieves context, fits the prompt to the
/// budget and asks the backend. Uses the default template.
pub fn generate_scenario(
    inputs: &GenerationInputs<'_>,
    config: &GenerationConfig,
    embedder: &dyn Embedder,
    backend: &dyn Backend,
) -> Result<GeneratedScenario, GeneratorError> {
    generate_scenario_with(&PromptTemplate::default(), inputs, config, embedder, backend)
}

pub fn generate_scenario_with(
    template: &PromptTemplate,
    inputs: &GenerationInputs<'_>,
    config: &GenerationConfig,
    embedder: &dyn Embedder,
    backend: &dyn Backend,
) -> Result<GeneratedScenario, GeneratorError> {
    config.validate()?;
    inputs.request.validate().map_err(GeneratorError::Request)?;
    inputs.index.check_compatible(embedder.spec())?;

    let query = build_retrieval_query_with(template, inputs.reqs, inputs.request, config.prompt_mode)?;
    let query_vector = embedder.embed(&query.text)?;
    let hits = inputs.index.query_top_k(&query_vector, config.top_k)?;
    let drop_order = requirement_drop_order(inputs.reqs.as_slice(), &inputs.request.description, embedder)?;
    let prompt = enforce_token_budget(
        &BudgetRequest {
            query: &query,
            hits: &hits,
            glossary: inputs.glossary,
            requirement_drop_order: &drop_order,
        },
        config.token_budget,
    )?;

    let mut sections = prompt.sections().clone();
    let context = sections.context.take().unwrap_or_default();
    let provenance = Provenance {
        config: config.clone(),
        embedder_fingerprint: inputs.index.embedder_fingerprint().to_owned(),
        included_k: prompt.included_k,
        included_req_ids: prompt.included_req_ids.clone(),
        hits: context
            .iter()
            .map(|h| HitRecord {
                passage_id: h.passage_id.clone(),
                rank: h.rank,
                similarity: h.similarity,
            })
            .collect(),
        sections,
        template: template.source().to_owned(),
        prompt_tokens: prompt.token_count,
        prompt_sha256: sha256_hex(&prompt.text),
    };
    call_backend(&prompt, provenance, backend)
}

fn call_backend(
    prompt: &AssembledPrompt,
    provenance: Provenance,
    backend: &dyn Backend,
) -> Result<GeneratedScenario, GeneratorError> {
    let config = &provenance.config;
    if prompt.token_count > config.token_budget {
        return Err(GeneratorError::BudgetViolated {
            token_count: prompt.token_count,
            budget: config.token_budget,
        });
    }
    let raw_output = backend.complete(&CompletionRequest {
        system_message: SYSTEM_MESSAGE,
        prompt,
        temperature: config.temperature,
        max_output_tokens: config.max_output_tokens,
    })?;
    let Some(ParsedScenario { title, steps }) = parse_scenario_output(&raw_output) else {
        return Err(GeneratorError::Parse { raw_output });
    };
    Ok(GeneratedScenario {
        title,
        steps,
        raw_output,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{chunk_document, ChunkingPolicy, OriginFormat, Requirement, SourceDocument};
    use crate::embedding::LocalEmbedder;
    use crate::vector_index::build_index;

    fn reqs() -> RequirementsSet {
        RequirementsSet::new(vec![
            Requirement {
                req_id: "R1".into(),
                section: "Zustellung".into(),
                statement: "Der Zusteller scannt jedes Paket vor der Zustellung.".into(),
            },
            Requirement {
                req_id: "R2".into(),
                section: "Ausland".into(),
                statement: "Shipments to a Zollauschlussgebiet require the ZAB list check.".into(),
            },
        ])
        .unwrap()
    }

    fn index(n_docs: usize) -> VectorIndex {
        let texts = [
            "Open the LIEF_POST app in VB mode before the first delivery.",
            "The ZAB list names every Zollauschlussgebiet. Rücksendung abroad needs a customs form.",
            "Signatures are captured on the handheld after the parcel is scanned.",
        ];
        let policy = ChunkingPolicy::new(64, 0).unwrap();
        let passages: Vec<_> = texts[..n_docs]
            .iter()
            .enumerate()
            .flat_map(|(i, t)| {
                let doc = SourceDocument::from_raw(format!("d{i}.txt"), format!("d{i}"), t, OriginFormat::Plain);
                chunk_document(&doc, &policy)
            })
            .collect();
        build_index(&passages, &LocalEmbedder::default()).unwrap()
    }

    fn run(
        idx: &VectorIndex,
        request: &ScenarioRequest,
        config: &GenerationConfig,
    ) -> Result<GeneratedScenario, GeneratorError> {
        let reqs = reqs();
        let glossary = [GlossaryEntry::new("Rücksendung", "return shipment")];
        let inputs = GenerationInputs {
            reqs: &reqs,
            request,
            glossary: &glossary,
            index: idx,
        };
        generate_scenario(&inputs, config, &LocalEmbedder::default(), &MockBackend::default())
    }

    #[test]
    fn same_inputs_same_scenario() {
        let idx = index(3);
        let req = ScenarioRequest::new("Delivery with Rücksendung Ausland.");
        let config = GenerationConfig::new("mock", PromptMode::ZeroShot, 3, 4096);
        let a = run(&idx, &req, &config).unwrap();
        let b = run(&idx, &req, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.title, "Delivery with Rücksendung Ausland.");
        assert_eq!(a.steps.len(), 3 + 1 + 1);
    }

    #[test]
    fn k_larger_than_index() {
        let idx = index(2);
        let config = GenerationConfig::new("mock", PromptMode::ZeroShot, 3, 4096);
        let out = run(&idx, &ScenarioRequest::new("Delivery abroad"), &config).unwrap();
        assert_eq!(out.provenance.hits.len(), 2);
        assert_eq!(out.provenance.included_k, 2);
    }

    #[test]
    fn few_shot_needs_example() {
        let idx = index(3);
        let req = ScenarioRequest::new("Delivery abroad");
        assert!(run(&idx, &req, &GenerationConfig::new("mock", PromptMode::ZeroShot, 1, 4096)).is_ok());
        assert!(matches!(
            run(&idx, &req, &GenerationConfig::new("mock", PromptMode::FewShot, 1, 4096)),
            Err(GeneratorError::Prompt(PromptError::MissingExample))
        ));
    }

    #[test]
    fn provenance_replays_byte_identically() {
        let idx = index(3);
        let req = ScenarioRequest::new("Delivery abroad").with_example(None, "TS: Pickup\n1. Open the app.");
        let config = GenerationConfig::new("mock", PromptMode::FewShot, 2, 4096);
        let out = run(&idx, &req, &config).unwrap();
        let json = serde_json::to_string(&out.provenance).unwrap();
        let restored: Provenance = serde_json::from_str(&json).unwrap();
        let again = restored.replay(&idx, &MockBackend::default()).unwrap();
        assert_eq!(again.raw_output, out.raw_output);
        assert_eq!(again.render(), out.render());
    }

    #[test]
    fn replay_detects_a_changed_index() {
        let idx = index(3);
        let out = run(&idx, &ScenarioRequest::new("Delivery abroad"), &GenerationConfig::new("mock", PromptMode::ZeroShot, 3, 4096)).unwrap();
        assert!(out.provenance.replay(&index(1), &MockBackend::default()).is_err());
    }

    #[test]
    fn budget_is_respected() {
        let idx = index(3);
        let config = GenerationConfig::new("mock", PromptMode::ZeroShot, 3, 4096).with_budget(110);
        let out = run(&idx, &ScenarioRequest::new("Delivery abroad"), &config).unwrap();
        assert!(out.provenance.prompt_tokens <= 110);
        assert!(out.provenance.included_k < 3);
    }

    #[test]
    fn config_validation() {
        let ok = GenerationConfig::new("gpt", PromptMode::ZeroShot, 1, 4096);
        assert_eq!(ok.token_budget, 3072);
        assert!(ok.validate().is_ok());
        assert!(ok.clone().with_budget(5000).validate().is_err());
        assert!(ok.clone().with_temperature(-0.1).validate().is_err());
        assert!(GenerationConfig::new("gpt", PromptMode::ZeroShot, 0, 4096).validate().is_err());
    }

    #[test]
    fn endpoint_round_trip() {
        let p: BackendProfile =
            serde_json::from_str(r#"{"backend_id":"a","endpoint":"mock"}"#).unwrap();
        assert_eq!(p.endpoint, Endpoint::Mock);
        assert_eq!(p.token_limit, DEFAULT_TOKEN_LIMIT);
        assert!("ftp://x".parse::<Endpoint>().is_err());
        let url: Endpoint = "https://api.example.com/v1/chat/completions".parse().unwrap();
        assert_eq!(url.to_string(), "https://api.example.com/v1/chat/completions");
    }

    struct Garbage;
    impl Backend for Garbage {
        fn backend_id(&self) -> &str {
            "garbage"
        }
        fn complete(&self, _: &CompletionRequest<'_>) -> Result<String, BackendError> {
            Ok("I cannot help with that.".into())
        }
    }

    #[test]
    fn unparseable_output_keeps_raw_text() {
        let idx = index(1);
        let reqs = reqs();
        let req = ScenarioRequest::new("x");
        let inputs = GenerationInputs { reqs: &reqs, request: &req, glossary: &[], index: &idx };
        let config = GenerationConfig::new("garbage", PromptMode::ZeroShot, 1, 4096);
        match generate_scenario(&inputs, &config, &LocalEmbedder::default(), &Garbage) {
            Err(GeneratorError::Parse { raw_output }) => assert_eq!(raw_output, "I cannot help with that."),
            other => panic!("{other:?}"),
        }
    }
}
