//! Shrinks the token budget step by step and shows what the prompt keeps:
//! context passages go first, then the least relevant requirements.

use std::path::Path;

use scenario_rag::corpus::{chunk_corpus, load_corpus, load_glossary, load_request, load_requirements, ChunkingPolicy};
use scenario_rag::embedding::{Embedder, LocalEmbedder};
use scenario_rag::prompt::{
    build_retrieval_query, enforce_token_budget, requirement_drop_order, BudgetRequest, PromptError, PromptMode,
};
use scenario_rag::vector_index::build_index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample");
    let reqs = load_requirements(data.join("reqs.csv"))?;
    let glossary = load_glossary(data.join("glossary.csv"))?;
    let request = load_request(data.join("requests/ts03.txt"))?;
    let passages = chunk_corpus(&load_corpus(data.join("corpus"))?, &ChunkingPolicy::new(64, 0)?);
    let embedder = LocalEmbedder::new(256)?;
    let index = build_index(&passages, &embedder)?;

    let query = build_retrieval_query(&reqs, &request, PromptMode::ZeroShot)?;
    let hits = index.query_top_k(&embedder.embed(&query.text)?, 3)?;
    let drop_order = requirement_drop_order(reqs.as_slice(), &request.description, &embedder)?;
    let budget_request = BudgetRequest {
        query: &query,
        hits: &hits,
        glossary: &glossary,
        requirement_drop_order: &drop_order,
    };

    println!("{:>6}  {:>6}  {:>3}  requirements", "budget", "tokens", "k");
    for budget in (100..=700).rev().step_by(50) {
        match enforce_token_budget(&budget_request, budget) {
            Ok(p) => println!("{budget:>6}  {:>6}  {:>3}  {}", p.token_count, p.included_k, p.included_req_ids.join(" ")),
            Err(e @ PromptError::BudgetInfeasible { .. }) => println!("{budget:>6}  {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
