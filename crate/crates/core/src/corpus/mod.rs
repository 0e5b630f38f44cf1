//! Domain documentation, requirements, glossaries and scenario requests.
//!
//! Everything that enters the pipeline from disk passes through here:
//! documentation is normalized and chunked into [`Passage`]s, requirement and
//! glossary CSV files are parsed with their uniqueness invariants enforced, and
//! scenario request files are read from their key-value format.

mod chunk;
mod load;
mod normalize;
mod tokenize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chunk::{chunk_corpus, chunk_document};
pub use load::{load_corpus, load_glossary, load_request, load_requirements, parse_request};
pub use normalize::{normalize_bytes, normalize_text};
pub use tokenize::{count_tokens, token_spans, tokenize, TokenSpan};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed CSV: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: duplicate {kind} {id:?}")]
    Duplicate {
        path: String,
        kind: &'static str,
        id: String,
    },
    #[error("{path}: record {record}: missing required field `{field}`")]
    MissingField {
        path: String,
        record: String,
        field: &'static str,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("invalid chunking policy: overlap {overlap} must be smaller than max_tokens {max}")]
    Policy { max: usize, overlap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OriginFormat {
    Plain,
    Markdown,
    Html,
}

impl OriginFormat {
    /// Picks the format from a file extension; `None` for unsupported files.
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "txt" => Some(Self::Plain),
            "md" | "markdown" => Some(Self::Markdown),
            "html" | "htm" => Some(Self::Html),
            _ => None,
        }
    }
}

/// A normalized documentation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDocument {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub origin_format: OriginFormat,
}

impl SourceDocument {
    /// Builds a document from raw content, normalizing the body.
    pub fn from_raw(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        raw: &str,
        origin_format: OriginFormat,
    ) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            body: normalize_text(raw, origin_format),
            origin_format,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }
}

/// A token-bounded slice of a document; the unit of indexing and retrieval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub text: String,
    pub token_count: usize,
    pub source_doc: String,
}

impl Passage {
    /// Ids sort in position order within a document.
    pub fn make_id(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}#{ordinal:06}")
    }

    /// Builds a passage with a freshly measured token count.
    pub fn new(passage_id: impl Into<String>, text: impl Into<String>, source_doc: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            passage_id: passage_id.into(),
            token_count: count_tokens(&text),
            text,
            source_doc: source_doc.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkingPolicy {
    max_tokens: usize,
    overlap_tokens: usize,
}

impl ChunkingPolicy {
    pub const DEFAULT_MAX_TOKENS: usize = 512;

    pub fn new(max_tokens: usize, overlap_tokens: usize) -> Result<Self, CorpusError> {
        if max_tokens == 0 || overlap_tokens >= max_tokens {
            return Err(CorpusError::Policy {
                max: max_tokens,
                overlap: overlap_tokens,
            });
        }
        Ok(Self {
            max_tokens,
            overlap_tokens,
        })
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn overlap_tokens(&self) -> usize {
        self.overlap_tokens
    }
}

impl Default for ChunkingPolicy {
    fn default() -> Self {
        Self {
            max_tokens: Self::DEFAULT_MAX_TOKENS,
            overlap_tokens: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub req_id: String,
    pub section: String,
    pub statement: String,
}

/// Requirements grouped by feature section, in file order, with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequirementsSet {
    requirements: Vec<Requirement>,
}

impl RequirementsSet {
    /// Fails with the offending id when two requirements share an id.
    pub fn new(requirements: Vec<Requirement>) -> Result<Self, String> {
        let mut seen = std::collections::HashSet::new();
        for req in &requirements {
            if !seen.insert(req.req_id.as_str()) {
                return Err(req.req_id.clone());
            }
        }
        Ok(Self { requirements })
    }

    pub fn len(&self) -> usize {
        self.requirements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Requirement> {
        self.requirements.iter()
    }

    pub fn as_slice(&self) -> &[Requirement] {
        &self.requirements
    }

    pub fn get(&self, req_id: &str) -> Option<&Requirement> {
        self.requirements.iter().find(|r| r.req_id == req_id)
    }

    /// Distinct sections in first-appearance order.
    pub fn sections(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.requirements {
            if !out.contains(&r.section.as_str()) {
                out.push(&r.section);
            }
        }
        out
    }
}

impl<'a> IntoIterator for &'a RequirementsSet {
    type Item = &'a Requirement;
    type IntoIter = std::slice::Iter<'a, Requirement>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossaryEntry {
    pub term: String,
    pub definition: String,
}

impl GlossaryEntry {
    pub fn new(term: impl Into<String>, definition: impl Into<String>) -> Self {
        Self {
            term: term.into(),
            definition: definition.into(),
        }
    }
}

impl fmt::Display for GlossaryEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.term, self.definition)
    }
}

/// What to generate, optionally with a worked example for few-shot prompting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRequest {
    pub description: String,
    pub example_description: Option<String>,
    pub example_scenario: Option<String>,
}

impl ScenarioRequest {
    pub fn new(description: impl Into<String>) -> Self {
        Self {
            description: description.into(),
            example_description: None,
            example_scenario: None,
        }
    }

    pub fn with_example(mut self, description: Option<String>, scenario: impl Into<String>) -> Self {
        self.example_description = description;
        self.example_scenario = Some(scenario.into());
        self
    }

    pub fn has_example(&self) -> bool {
        self.example_scenario.is_some()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.description.trim().is_empty() {
            return Err("description must not be empty".into());
        }
        if self.example_description.is_some() && self.example_scenario.is_none() {
            return Err("example_description given without example_scenario".into());
        }
        Ok(())
    }
}
