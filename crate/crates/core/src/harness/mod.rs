//! Grid evaluation, survey aggregation and their reports.

mod config;
mod grid;
mod report;
mod survey;

use thiserror::Error;

pub use config::{ChunkingSection, GridConfig, GridConfigFile, ScenarioEntry};
pub use grid::{
    canonical_text, run_grid, run_grid_with, CellResult, CellStatus, ConfigGrid, GridCell, GridInputs, GridResult,
    RunOptions, ScenarioCase, ScenarioOutcome,
};
pub use report::{render_report, Report, ReportFormat};
pub use survey::{
    aggregate_survey, load_ratings, Criterion, CriterionSummary, Deviation, LikertRecord, SurveySummary,
};

use crate::corpus::CorpusError;
use crate::embedding::EmbeddingError;
use crate::metrics::MetricsError;
use crate::prompt::PromptError;
use crate::vector_index::IndexError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("grid config: {0}")]
    Config(String),
    #[error("survey: {0}")]
    Survey(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
