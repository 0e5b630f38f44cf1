//! Prints the retrieval query and the generation prompt for one request,
//! in zero-shot and few-shot form.

use std::path::Path;

use scenario_rag::corpus::{chunk_corpus, load_corpus, load_glossary, load_request, load_requirements, ChunkingPolicy};
use scenario_rag::embedding::{Embedder, LocalEmbedder};
use scenario_rag::prompt::{build_generation_prompt, build_retrieval_query, PromptMode};
use scenario_rag::vector_index::build_index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample");
    let reqs = load_requirements(data.join("reqs.csv"))?;
    let glossary = load_glossary(data.join("glossary.csv"))?;
    let request = load_request(data.join("requests/ts01.txt"))?;
    let passages = chunk_corpus(&load_corpus(data.join("corpus"))?, &ChunkingPolicy::new(64, 0)?);
    let embedder = LocalEmbedder::new(256)?;
    let index = build_index(&passages, &embedder)?;

    for mode in [PromptMode::ZeroShot, PromptMode::FewShot] {
        let query = build_retrieval_query(&reqs, &request, mode)?;
        let hits = index.query_top_k(&embedder.embed(&query.text)?, 2)?;
        let prompt = build_generation_prompt(&query, &hits, &glossary)?;
        println!("==== {} retrieval query ({} tokens)\n{}", mode.short(), query.token_count, query.text);
        println!("==== {} generation prompt ({} tokens)\n{}", mode.short(), prompt.token_count, prompt.text);
    }
    Ok(())
}
