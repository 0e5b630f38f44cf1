//! Retrieval query and generation prompt assembly.
//!
//! Prompts are built in two stages. The retrieval query carries the task,
//! the requirements, the scenario description and (few-shot only) the worked
//! example; it is what gets embedded for context retrieval. The generation
//! prompt adds the retrieved context passages and the glossary. Glossary
//! content never appears in a retrieval query.

mod budget;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{count_tokens, GlossaryEntry, Requirement, RequirementsSet, ScenarioRequest};
use crate::embedding::EmbeddingError;
use crate::vector_index::RetrievalHit;

pub use budget::{enforce_token_budget, requirement_drop_order, BudgetRequest, DEFAULT_TOKEN_LIMIT, SAFETY_FACTOR};
pub use template::{PromptTemplate, Slot, DEFAULT_TEMPLATE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("few-shot prompting needs an example scenario in the request")]
    MissingExample,
    #[error("at least one requirement is needed")]
    NoRequirements,
    #[error("expected a {expected} prompt, got {actual}")]
    WrongStage {
        expected: PromptStage,
        actual: PromptStage,
    },
    #[error("token budget {budget} is infeasible: the smallest achievable prompt has {minimal} tokens")]
    BudgetInfeasible { budget: usize, minimal: usize },
    #[error("invalid template: {0}")]
    Template(String),
    #[error("ranking requirements failed: {0}")]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptMode {
    #[serde(rename = "zs", alias = "zero_shot")]
    ZeroShot,
    #[serde(rename = "fs", alias = "few_shot")]
    FewShot,
}

impl PromptMode {
    pub fn short(self) -> &'static str {
        match self {
            Self::ZeroShot => "ZS",
            Self::FewShot => "FS",
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZeroShot => "zs",
            Self::FewShot => "fs",
        })
    }
}

impl FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zs" | "zero_shot" | "zero-shot" => Ok(Self::ZeroShot),
            "fs" | "few_shot" | "few-shot" => Ok(Self::FewShot),
            other => Err(format!("unknown prompt mode {other:?} (expected zs or fs)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStage {
    RetrievalQuery,
    Generation,
}

impl fmt::Display for PromptStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RetrievalQuery => "retrieval query",
            Self::Generation => "generation",
        })
    }
}

const TASK_INSTRUCTION: &str = "Write one test scenario for the scenario description below, based on \
the requirements. Start with a one-line title, then list the test steps as a numbered list, each step \
with its expected result. Use the domain context if provided and keep domain terms exactly as written.";

const FEW_SHOT_INSTRUCTION: &str = " Follow the structure and level of detail of the example scenario.";

/// Instruction text for `mode`; the zero-shot text never mentions an example.
pub fn task_instruction(mode: PromptMode) -> String {
    match mode {
        PromptMode::ZeroShot => TASK_INSTRUCTION.to_owned(),
        PromptMode::FewShot => format!("{TASK_INSTRUCTION}{FEW_SHOT_INSTRUCTION}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleBlock {
    pub description: Option<String>,
    pub scenario: String,
}

/// The pieces a prompt is rendered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSections {
    pub mode: PromptMode,
    pub task_instruction: String,
    pub requirements: Vec<Requirement>,
    pub scenario_description: String,
    pub example: Option<ExampleBlock>,
    /// `None` in retrieval queries.
    pub context: Option<Vec<RetrievalHit>>,
    /// `None` in retrieval queries.
    pub glossary: Option<Vec<GlossaryEntry>>,
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl PromptSections {
    pub fn stage(&self) -> PromptStage {
        if self.context.is_some() || self.glossary.is_some() {
            PromptStage::Generation
        } else {
            PromptStage::RetrievalQuery
        }
    }

    fn slot_text(&self, slot: Slot) -> Option<String> {
        match slot {
            Slot::Task => Some(self.task_instruction.clone()),
            Slot::Requirements => Some(
                self.requirements
                    .iter()
                    .map(|r| format!("- [{}] ({}) {}", r.req_id, r.section, one_line(&r.statement)))
                    .collect::<Vec<_>>()
                    .join("\n"),
            ),
            Slot::Scenario => Some(one_line(&self.scenario_description)),
            Slot::Example => self.example.as_ref().map(|ex| {
                let mut lines = Vec::new();
                if let Some(d) = &ex.description {
                    lines.push(format!("Description: {}", one_line(d)));
                }
                lines.push("Scenario:".to_owned());
                lines.push(ex.scenario.trim_end().to_owned());
                lines.join("\n")
            }),
            Slot::Context => self.context.as_ref().map(|hits| {
                hits.iter()
                    .map(|h| format!("[{}] {}", h.rank, one_line(&h.text)))
                    .collect::<Vec<_>>()
                    .join("\n")
            }),
            Slot::Glossary => self.glossary.as_ref().map(|entries| {
                entries
                    .iter()
                    .map(|g| format!("{}: {}", g.term, one_line(&g.definition)))
                    .collect::<Vec<_>>()
                    .join("\n")
            }),
        }
    }

    pub fn render(&self, template: &PromptTemplate) -> String {
        template.render(|slot| self.slot_text(slot))
    }
}

/// A rendered prompt plus the bookkeeping needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledPrompt {
    pub stage: PromptStage,
    pub text: String,
    pub token_count: usize,
    pub included_k: usize,
    pub included_req_ids: Vec<String>,
    sections: PromptSections,
    template: PromptTemplate,
}

impl AssembledPrompt {
    pub fn assemble(sections: PromptSections, template: &PromptTemplate) -> Self {
        let text = sections.render(template);
        Self {
            stage: sections.stage(),
            token_count: count_tokens(&text),
            included_k: sections.context.as_ref().map_or(0, Vec::len),
            included_req_ids: sections.requirements.iter().map(|r| r.req_id.clone()).collect(),
            text,
            sections,
            template: template.clone(),
        }
    }

    pub fn sections(&self) -> &PromptSections {
        &self.sections
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn mode(&self) -> PromptMode {
        self.sections.mode
    }
}

/// Builds the retrieval query with the default template.
pub fn build_retrieval_query(
    reqs: &RequirementsSet,
    request: &ScenarioRequest,
    mode: PromptMode,
) -> Result<AssembledPrompt, PromptError> {
    build_retrieval_query_with(&PromptTemplate::default(), reqs, request, mode)
}

pub fn build_retrieval_query_with(
    template: &PromptTemplate,
    reqs: &RequirementsSet,
    request: &ScenarioRequest,
    mode: PromptMode,
) -> Result<AssembledPrompt, PromptError> {
    if reqs.is_empty() {
        return Err(PromptError::NoRequirements);
    }
    let example = match mode {
        PromptMode::ZeroShot => None,
        PromptMode::FewShot => {
            let scenario = request.example_scenario.clone().ok_or(PromptError::MissingExample)?;
            Some(ExampleBlock {
                description: request.example_description.clone(),
                scenario,
            })
        }
    };
    let sections = PromptSections {
        mode,
        task_instruction: task_instruction(mode),
        requirements: reqs.as_slice().to_vec(),
        scenario_description: request.description.clone(),
        example,
        context: None,
        glossary: None,
    };
    Ok(AssembledPrompt::assemble(sections, template))
}

/// Extends a retrieval query with context passages (in rank order) and glossary.
pub fn build_generation_prompt(
    query: &AssembledPrompt,
    hits: &[RetrievalHit],
    glossary: &[GlossaryEntry],
) -> Result<AssembledPrompt, PromptError> {
    if query.stage != PromptStage::RetrievalQuery {
        return Err(PromptError::WrongStage {
            expected: PromptStage::RetrievalQuery,
            actual: query.stage,
        });
    }
    let mut hits = hits.to_vec();
    hits.sort_by_key(|h| h.rank);
    let mut sections = query.sections.clone();
    sections.context = Some(hits);
    sections.glossary = Some(glossary.to_vec());
    Ok(AssembledPrompt::assemble(sections, &query.template))
}
