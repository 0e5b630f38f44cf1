//! Token budget enforcement for generation prompts.
//!
//! When the full prompt does not fit, context passages are dropped from the
//! lowest rank upward. Only once no passage is left are requirements dropped,
//! least relevant first. The example block and the glossary always stay.

use std::cmp::Ordering;

use super::{AssembledPrompt, PromptError, PromptStage};
use crate::corpus::{count_tokens, GlossaryEntry, Requirement};
use crate::embedding::{cosine_similarity, Embedder};
use crate::vector_index::RetrievalHit;

/// Context window assumed when nothing else is configured.
pub const DEFAULT_TOKEN_LIMIT: usize = 4096;
/// Fraction of the backend limit granted to the approximate tokenizer.
pub const SAFETY_FACTOR: f64 = 0.75;

#[derive(Debug, Clone, Copy)]
pub struct BudgetRequest<'a> {
    /// A retrieval-stage prompt carrying the task, requirements, scenario and example.
    pub query: &'a AssembledPrompt,
    pub hits: &'a [RetrievalHit],
    pub glossary: &'a [GlossaryEntry],
    /// Requirement ids, least relevant first. Requirements missing from this
    /// list are dropped after the listed ones, last-listed first.
    pub requirement_drop_order: &'a [String],
}

/// Orders requirement ids by ascending cosine similarity to `description`.
///
/// Ties keep the later requirement first in the drop order. Requirements
/// without any token sort before everything else.
pub fn requirement_drop_order(
    requirements: &[Requirement],
    description: &str,
    embedder: &dyn Embedder,
) -> Result<Vec<String>, PromptError> {
    let target = embedder.embed(description)?;
    let mut scored = Vec::with_capacity(requirements.len());
    for (pos, req) in requirements.iter().enumerate() {
        let similarity = if count_tokens(&req.statement) == 0 {
            f64::NEG_INFINITY
        } else {
            cosine_similarity(&embedder.embed(&req.statement)?, &target)?
        };
        scored.push((similarity, pos, req.req_id.clone()));
    }
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| b.1.cmp(&a.1))
    });
    Ok(scored.into_iter().map(|(_, _, id)| id).collect())
}

/// Assembles the generation prompt and shrinks it until it fits `budget`.
pub fn enforce_token_budget(request: &BudgetRequest<'_>, budget: usize) -> Result<AssembledPrompt, PromptError> {
    let query = request.query;
    if query.stage != PromptStage::RetrievalQuery {
        return Err(PromptError::WrongStage {
            expected: PromptStage::RetrievalQuery,
            actual: query.stage,
        });
    }
    let base = query.sections();
    let assemble = |reqs: &[Requirement], hits: &[RetrievalHit]| {
        let mut sections = base.clone();
        sections.requirements = reqs.to_vec();
        sections.context = Some(hits.to_vec());
        sections.glossary = Some(request.glossary.to_vec());
        AssembledPrompt::assemble(sections, query.template())
    };
    let infeasible = || PromptError::BudgetInfeasible {
        budget,
        minimal: assemble(&[], &[]).token_count,
    };
    let core = count_tokens(&base.task_instruction) + count_tokens(&base.scenario_description);
    if budget < core {
        return Err(infeasible());
    }

    let mut hits = request.hits.to_vec();
    hits.sort_by_key(|h| h.rank);

    let mut requirements = base.requirements.clone();
    // strategy (i): fewer context passages
    for keep in (0..=hits.len()).rev() {
        let prompt = assemble(&requirements, &hits[..keep]);
        if prompt.token_count <= budget {
            return Ok(prompt);
        }
    }

    // strategy (ii): fewer requirements
    let order = drop_sequence(&requirements, request.requirement_drop_order);
    for id in order {
        requirements.retain(|r| r.req_id != id);
        let prompt = assemble(&requirements, &[]);
        if prompt.token_count <= budget {
            return Ok(prompt);
        }
    }

    Err(infeasible())
}

fn drop_sequence(requirements: &[Requirement], preferred: &[String]) -> Vec<String> {
    let mut order: Vec<String> = preferred
        .iter()
        .filter(|id| requirements.iter().any(|r| &r.req_id == *id))
        .cloned()
        .collect();
    for r in requirements.iter().rev() {
        if !order.contains(&r.req_id) {
            order.push(r.req_id.clone());
        }
    }
    order
}
