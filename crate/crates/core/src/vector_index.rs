//! Exact cosine top-k retrieval over embedded passages, with a line-oriented
//! on-disk format.
//!
//! Persisted layout (UTF-8, one record per line):
//!
//! ```text
//! scenario-rag-index<TAB>version=1<TAB>dimension=256<TAB>fingerprint=local_deterministic:256:-<TAB>entries=2
//! doc.txt#000000<TAB>0.125000000 -0.031250000 ...<TAB>passage text with \n escaped
//! doc.txt#000001<TAB>...
//! ```
//!
//! Vector components are stored with 9 decimal places. Vectors are rounded to
//! that precision when they enter the index, so a persist/load round trip is
//! bit-exact.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Passage;
use crate::embedding::{cosine_similarity, Embedder, EmbedderSpec, EmbeddingError, EmbeddingVector};

pub const FORMAT_MAGIC: &str = "scenario-rag-index";
pub const FORMAT_VERSION: u32 = 1;
/// Decimal places kept for stored vector components.
pub const VECTOR_PRECISION: usize = 9;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot build an index from zero passages")]
    NoPassages,
    #[error("duplicate passage id {0:?}")]
    DuplicateId(String),
    #[error("embedding passage {passage_id:?} failed: {source}")]
    Embed {
        passage_id: String,
        #[source]
        source: EmbeddingError,
    },
    #[error("index dimension {index} does not match vector dimension {vector}")]
    DimensionMismatch { index: usize, vector: usize },
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Similarity(#[from] EmbeddingError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("stale index {path}: {message}; rebuild it with `index build`")]
    Stale { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub passage_id: String,
    pub text: String,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub passage_id: String,
    pub text: String,
    pub similarity: f64,
    /// 1-based.
    pub rank: usize,
}

/// Immutable after construction; share it freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    entries: Vec<IndexEntry>,
    dimension: usize,
    embedder_fingerprint: String,
}

fn quantize(value: f64) -> f64 {
    // k / 1e9 with |k| < 2^53 is the double nearest the decimal, which is
    // exactly what parsing the 9-place text yields
    if value.abs() < 1e6 {
        return (value * 1e9).round() / 1e9;
    }
    format!("{value:.VECTOR_PRECISION$}")
        .parse()
        .expect("formatted float parses")
}

impl VectorIndex {
    /// Assembles an index from pre-computed entries.
    ///
    /// Vectors are rounded to [`VECTOR_PRECISION`] decimals.
    pub fn from_entries(
        entries: Vec<IndexEntry>,
        dimension: usize,
        embedder_fingerprint: impl Into<String>,
    ) -> Result<Self, IndexError> {
        let mut seen = HashSet::new();
        let mut stored = Vec::with_capacity(entries.len());
        for mut entry in entries {
            if entry.vector.dimension() != dimension {
                return Err(IndexError::DimensionMismatch {
                    index: dimension,
                    vector: entry.vector.dimension(),
                });
            }
            if !seen.insert(entry.passage_id.clone()) {
                return Err(IndexError::DuplicateId(entry.passage_id));
            }
            entry.vector = entry.vector.values().iter().map(|&x| quantize(x)).collect::<Vec<_>>().into();
            stored.push(entry);
        }
        Ok(Self {
            entries: stored,
            dimension,
            embedder_fingerprint: embedder_fingerprint.into(),
        })
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn embedder_fingerprint(&self) -> &str {
        &self.embedder_fingerprint
    }

    pub fn get(&self, passage_id: &str) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.passage_id == passage_id)
    }

    /// Fails with a stale-index error if this index was built by another embedder.
    pub fn check_compatible(&self, spec: &EmbedderSpec) -> Result<(), IndexError> {
        if spec.fingerprint() != self.embedder_fingerprint || spec.dimension != self.dimension {
            return Err(IndexError::Stale {
                path: "<memory>".into(),
                message: format!(
                    "index was built with embedder {} (dimension {}), pipeline uses {}",
                    self.embedder_fingerprint,
                    self.dimension,
                    spec.fingerprint()
                ),
            });
        }
        Ok(())
    }

    /// Exact top-k by cosine similarity; ties go to the smaller passage id.
    pub fn query_top_k(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<RetrievalHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if self.entries.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        if query.dimension() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                index: self.dimension,
                vector: query.dimension(),
            });
        }

        let mut scored = self
            .entries
            .iter()
            .map(|e| Ok((cosine_similarity(query, &e.vector)?, e)))
            .collect::<Result<Vec<_>, EmbeddingError>>()?;
        let by_rank = |a: &(f64, &IndexEntry), b: &(f64, &IndexEntry)| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.passage_id.cmp(&b.1.passage_id))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_by(by_rank);

        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (similarity, e))| RetrievalHit {
                passage_id: e.passage_id.clone(),
                text: e.text.clone(),
                similarity,
                rank: i + 1,
            })
            .collect())
    }

    /// Writes the index in the line format described in the module docs.
    pub fn persist(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        let path = path.as_ref();
        let io_err = |source| IndexError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        writeln!(
            out,
            "{FORMAT_MAGIC}\tversion={FORMAT_VERSION}\tdimension={}\tfingerprint={}\tentries={}",
            self.dimension,
            escape(&self.embedder_fingerprint),
            self.entries.len()
        )
        .map_err(io_err)?;
        for entry in &self.entries {
            let components: Vec<String> = entry
                .vector
                .values()
                .iter()
                .map(|x| format!("{x:.VECTOR_PRECISION$}"))
                .collect();
            writeln!(
                out,
                "{}\t{}\t{}",
                escape(&entry.passage_id),
                components.join(" "),
                escape(&entry.text)
            )
            .map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }

    /// Reads an index without checking which embedder built it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let label = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| IndexError::Io {
            path: label.clone(),
            source,
        })?;
        let malformed = |line: usize, message: String| IndexError::Malformed {
            path: label.clone(),
            line,
            message,
        };

        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| malformed(1, "missing header".into()))?;
        let mut fields = header.split('\t');
        if fields.next() != Some(FORMAT_MAGIC) {
            return Err(malformed(1, "not an index file".into()));
        }
        let mut version = None;
        let mut dimension = None;
        let mut fingerprint = None;
        let mut declared = None;
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| malformed(1, format!("bad header field {field:?}")))?;
            match key {
                "version" => version = value.parse::<u32>().ok(),
                "dimension" => dimension = value.parse::<usize>().ok(),
                "fingerprint" => fingerprint = Some(unescape(value)),
                "entries" => declared = value.parse::<usize>().ok(),
                _ => {}
            }
        }
        let version = version.ok_or_else(|| malformed(1, "missing version".into()))?;
        if version != FORMAT_VERSION {
            return Err(IndexError::Stale {
                path: label,
                message: format!("format version {version}, expected {FORMAT_VERSION}"),
            });
        }
        let dimension = dimension.ok_or_else(|| malformed(1, "missing dimension".into()))?;
        let fingerprint = fingerprint.ok_or_else(|| malformed(1, "missing fingerprint".into()))?;

        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let mut parts = line.splitn(3, '\t');
            let (Some(id), Some(vector), Some(body)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(malformed(line_no, "expected three tab-separated fields".into()));
            };
            let values = vector
                .split(' ')
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| malformed(line_no, format!("bad vector component: {e}")))?;
            if values.len() != dimension {
                return Err(malformed(
                    line_no,
                    format!("vector has {} components, header says {dimension}", values.len()),
                ));
            }
            entries.push(IndexEntry {
                passage_id: unescape(id),
                text: unescape(body),
                vector: values.into(),
            });
        }
        if let Some(n) = declared {
            if n != entries.len() {
                return Err(malformed(1, format!("header declares {n} entries, found {}", entries.len())));
            }
        }
        Self::from_entries(entries, dimension, fingerprint).map_err(|e| malformed(0, e.to_string()))
    }

    /// Reads an index and rejects it unless it was built by `spec`'s embedder.
    pub fn load_for(path: impl AsRef<Path>, spec: &EmbedderSpec) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let index = Self::load(path)?;
        index.check_compatible(spec).map_err(|e| match e {
            IndexError::Stale { message, .. } => IndexError::Stale {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        Ok(index)
    }
}

/// Embeds every passage and collects the vectors into a new index.
pub fn build_index(passages: &[Passage], embedder: &dyn Embedder) -> Result<VectorIndex, IndexError> {
    if passages.is_empty() {
        return Err(IndexError::NoPassages);
    }
    let mut seen = HashSet::new();
    for p in passages {
        if !seen.insert(p.passage_id.as_str()) {
            return Err(IndexError::DuplicateId(p.passage_id.clone()));
        }
    }
    let entries = passages
        .iter()
        .map(|p| {
            let vector = embedder.embed(&p.text).map_err(|source| IndexError::Embed {
                passage_id: p.passage_id.clone(),
                source,
            })?;
            Ok(IndexEntry {
                passage_id: p.passage_id.clone(),
                text: p.text.clone(),
                vector,
            })
        })
        .collect::<Result<Vec<_>, IndexError>>()?;
    VectorIndex::from_entries(entries, embedder.spec().dimension, embedder.fingerprint())
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}
