//! TOML grid configuration. Relative paths resolve against the config file.
//!
//! ```toml
//! requirements = "reqs.csv"
//! glossary = "glossary.csv"
//! corpus = "corpus"          # or: index = "corpus.idx"
//! modes = ["zs", "fs"]
//! k_values = [1, 3]
//! workers = 1
//!
//! [chunking]
//! max_tokens = 512
//! overlap = 0
//!
//! [[backends]]
//! backend_id = "mock-a"
//! endpoint = "mock"
//!
//! [[scenarios]]
//! id = "TS01"
//! request = "requests/ts01.txt"
//! reference = "references/ts01.txt"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::grid::{run_grid, ConfigGrid, GridInputs, GridResult, RunOptions, ScenarioCase};
use super::HarnessError;
use crate::corpus::{
    chunk_corpus, load_corpus, load_glossary, load_request, load_requirements, ChunkingPolicy, GlossaryEntry,
    RequirementsSet,
};
use crate::embedding::{embedder_from_spec, Embedder, EmbedderSpec};
use crate::generator::BackendProfile;
use crate::metrics::MetricParams;
use crate::prompt::{PromptMode, PromptTemplate};
use crate::vector_index::{build_index, VectorIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkingSection {
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    #[serde(default)]
    pub overlap: usize,
}

fn default_max_tokens() -> usize {
    ChunkingPolicy::DEFAULT_MAX_TOKENS
}

impl Default for ChunkingSection {
    fn default() -> Self {
        Self {
            max_tokens: ChunkingPolicy::DEFAULT_MAX_TOKENS,
            overlap: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub id: String,
    pub request: PathBuf,
    pub reference: PathBuf,
}

fn default_workers() -> usize {
    1
}

/// The file as written; see [`GridConfig::load`] for the resolved form.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfigFile {
    pub requirements: PathBuf,
    pub glossary: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub modes: Vec<PromptMode>,
    pub k_values: Vec<usize>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub token_budget: Option<usize>,
    #[serde(default)]
    pub chunking: ChunkingSection,
    #[serde(default)]
    pub embedder: EmbedderSpec,
    pub backends: Vec<BackendProfile>,
    pub scenarios: Vec<ScenarioEntry>,
    #[serde(default)]
    pub metrics: MetricParams,
}

/// A grid configuration with every referenced file loaded.
pub struct GridConfig {
    pub grid: ConfigGrid,
    pub reqs: RequirementsSet,
    pub glossary: Vec<GlossaryEntry>,
    pub cases: Vec<ScenarioCase>,
    pub index: VectorIndex,
    pub embedder: Box<dyn Embedder>,
    pub template: PromptTemplate,
    pub metrics: MetricParams,
    pub workers: usize,
    pub token_budget: Option<usize>,
}

fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl GridConfig {
    pub fn parse(text: &str) -> Result<GridConfigFile, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let file = Self::parse(&read_text(path)?)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::resolve(file, base)
    }

    /// Loads everything `file` refers to, resolving paths against `base`.
    pub fn resolve(file: GridConfigFile, base: &Path) -> Result<Self, HarnessError> {
        let at = |p: &Path| base.join(p);
        if file.workers == 0 {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        if file.scenarios.is_empty() {
            return Err(HarnessError::Config("no [[scenarios]] listed".into()));
        }
        let grid = ConfigGrid::new(file.backends, file.modes, file.k_values)?;
        let reqs = load_requirements(at(&file.requirements))?;
        let glossary = match &file.glossary {
            Some(g) => load_glossary(at(g))?,
            None => Vec::new(),
        };
        let cases = file
            .scenarios
            .iter()
            .map(|s| {
                Ok(ScenarioCase {
                    scenario_id: s.id.clone(),
                    request: load_request(at(&s.request))?,
                    reference: read_text(&at(&s.reference))?,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let embedder = embedder_from_spec(&file.embedder)?;
        let index = match (&file.index, &file.corpus) {
            (Some(index), _) => VectorIndex::load_for(at(index), &file.embedder)?,
            (None, Some(corpus)) => {
                let policy = ChunkingPolicy::new(file.chunking.max_tokens, file.chunking.overlap)?;
                let passages = chunk_corpus(&load_corpus(at(corpus))?, &policy);
                build_index(&passages, embedder.as_ref())?
            }
            (None, None) => return Err(HarnessError::Config("set either `index` or `corpus`".into())),
        };
        let template = match &file.template {
            Some(t) => PromptTemplate::from_file(at(t))?,
            None => PromptTemplate::default(),
        };
        Ok(Self {
            grid,
            reqs,
            glossary,
            cases,
            index,
            embedder,
            template,
            metrics: file.metrics,
            workers: file.workers,
            token_budget: file.token_budget,
        })
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            workers: self.workers,
            metrics: self.metrics.clone(),
            template: self.template.clone(),
            token_budget: self.token_budget,
        }
    }

    /// Runs every cell of the configured grid.
    pub fn run(&self) -> Result<GridResult, HarnessError> {
        let inputs = GridInputs {
            reqs: &self.reqs,
            cases: &self.cases,
            glossary: &self.glossary,
            index: &self.index,
        };
        run_grid(&inputs, &self.grid, self.embedder.as_ref(), &self.run_options())
    }
}
