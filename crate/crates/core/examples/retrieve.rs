//! Top-k cosine retrieval for a free-text query.
//!
//! cargo run --example retrieve -- "Nachnahme nicht bezahlt" 3

use std::path::Path;

use scenario_rag::corpus::{chunk_corpus, load_corpus, ChunkingPolicy};
use scenario_rag::embedding::{Embedder, LocalEmbedder};
use scenario_rag::vector_index::build_index;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let query = args.next().unwrap_or_else(|| "Rücksendung Ausland CN23".to_owned());
    let k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let docs = load_corpus(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample/corpus"))?;
    let passages = chunk_corpus(&docs, &ChunkingPolicy::new(64, 0)?);
    let embedder = LocalEmbedder::new(256)?;
    let index = build_index(&passages, &embedder)?;

    for hit in index.query_top_k(&embedder.embed(&query)?, k)? {
        println!("#{} {:.4} {}", hit.rank, hit.similarity, hit.passage_id);
        println!("    {}", hit.text.lines().next().unwrap_or(""));
    }
    Ok(())
}
