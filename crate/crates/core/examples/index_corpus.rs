//! Chunk the sample corpus, embed it and write an index file.
//!
//! cargo run --example index_corpus -- /tmp/sample.idx

use std::path::Path;

use scenario_rag::corpus::{chunk_corpus, load_corpus, ChunkingPolicy};
use scenario_rag::embedding::{EmbedderSpec, LocalEmbedder};
use scenario_rag::vector_index::{build_index, VectorIndex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample/corpus");
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("sample.idx").display().to_string());

    let docs = load_corpus(&root)?;
    let policy = ChunkingPolicy::new(64, 8)?;
    let passages = chunk_corpus(&docs, &policy);
    for p in passages.iter().take(5) {
        println!("{:<28} {:>3} tokens", p.passage_id, scenario_rag::corpus::count_tokens(&p.text));
    }

    let embedder = LocalEmbedder::new(EmbedderSpec::DEFAULT_LOCAL_DIMENSION)?;
    let index = build_index(&passages, &embedder)?;
    index.persist(&out)?;
    let reloaded = VectorIndex::load(&out)?;
    assert_eq!(reloaded, index);
    println!("{} documents, {} passages -> {out}", docs.len(), index.len());
    Ok(())
}
