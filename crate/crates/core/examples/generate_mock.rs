//! End-to-end generation with the offline mock backend, then a replay from
//! the provenance record.

use std::path::Path;

use scenario_rag::corpus::{chunk_corpus, load_corpus, load_glossary, load_request, load_requirements, ChunkingPolicy};
use scenario_rag::embedding::LocalEmbedder;
use scenario_rag::generator::{generate_scenario, GenerationConfig, GenerationInputs, MockBackend};
use scenario_rag::prompt::PromptMode;
use scenario_rag::vector_index::build_index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample");
    let reqs = load_requirements(data.join("reqs.csv"))?;
    let glossary = load_glossary(data.join("glossary.csv"))?;
    let request = load_request(data.join("requests/ts02.txt"))?;
    let passages = chunk_corpus(&load_corpus(data.join("corpus"))?, &ChunkingPolicy::new(64, 0)?);
    let embedder = LocalEmbedder::new(256)?;
    let index = build_index(&passages, &embedder)?;

    let inputs = GenerationInputs { reqs: &reqs, request: &request, glossary: &glossary, index: &index };
    let config = GenerationConfig::new("mock", PromptMode::FewShot, 3, 4096);
    let backend = MockBackend::new("mock");
    let scenario = generate_scenario(&inputs, &config, &embedder, &backend)?;

    println!("{}\n", scenario.render());
    let p = &scenario.provenance;
    println!("prompt: {} tokens, sha256 {}", p.prompt_tokens, p.prompt_sha256);
    println!("context: {:?}", p.hit_passage_ids());
    println!("requirements: {:?}", p.included_req_ids);

    let replayed = p.replay(&index, &backend)?;
    assert_eq!(replayed, scenario);
    println!("replay from provenance: identical");
    Ok(())
}
