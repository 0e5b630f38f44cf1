//! Sentence-aware greedy chunking of normalized documents.

use super::tokenize::{count_tokens, token_spans, TokenSpan};
use super::{ChunkingPolicy, Passage, SourceDocument};

/// Chunks every document, keeping document order.
pub fn chunk_corpus(docs: &[SourceDocument], policy: &ChunkingPolicy) -> Vec<Passage> {
    docs.iter().flat_map(|d| chunk_document(d, policy)).collect()
}

/// Splits `doc.body` into passages of at most `policy.max_tokens` tokens.
///
/// Whole sentences are packed greedily. A sentence ends at `.`, `!` or `?`
/// followed by whitespace, or at a line break. A sentence longer than the
/// available room is cut at token boundaries. With a non-zero overlap each
/// passage after the first starts with the last `overlap_tokens` tokens of
/// its predecessor. Passage text is always a contiguous slice of the body.
pub fn chunk_document(doc: &SourceDocument, policy: &ChunkingPolicy) -> Vec<Passage> {
    let body = doc.body.as_str();
    let spans = token_spans(body);
    if spans.is_empty() {
        return Vec::new();
    }

    let max = policy.max_tokens();
    let overlap = policy.overlap_tokens();
    let fresh_capacity = max - overlap;
    let pieces = sentence_pieces(body, &spans, fresh_capacity);

    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for (piece_start, piece_end) in pieces {
        match current {
            Some((start, end)) if (piece_end - start) <= max => {
                debug_assert_eq!(end, piece_start);
                current = Some((start, piece_end));
            }
            Some((start, end)) => {
                ranges.push((start, end));
                let carried = overlap.min(end - start);
                current = Some((end - carried, piece_end));
            }
            None => current = Some((piece_start, piece_end)),
        }
    }
    ranges.extend(current);

    ranges
        .into_iter()
        .enumerate()
        .map(|(ordinal, (start, end))| {
            let text = &body[spans[start].0..spans[end - 1].1];
            let token_count = end - start;
            debug_assert_eq!(token_count, count_tokens(text));
            Passage {
                passage_id: Passage::make_id(&doc.doc_id, ordinal),
                text: text.to_owned(),
                token_count,
                source_doc: doc.doc_id.clone(),
            }
        })
        .collect()
}

/// Sentence ranges (token indices, end exclusive), with oversize sentences
/// cut into pieces of at most `capacity` tokens.
fn sentence_pieces(body: &str, spans: &[TokenSpan], capacity: usize) -> Vec<(usize, usize)> {
    let mut pieces = Vec::new();
    let mut start = 0;
    for idx in 0..spans.len() {
        if !ends_sentence(body, spans, idx) {
            continue;
        }
        let mut piece_start = start;
        while idx + 1 - piece_start > capacity {
            pieces.push((piece_start, piece_start + capacity));
            piece_start += capacity;
        }
        pieces.push((piece_start, idx + 1));
        start = idx + 1;
    }
    pieces
}

fn ends_sentence(body: &str, spans: &[TokenSpan], idx: usize) -> bool {
    let (start, end) = spans[idx];
    let Some(&(next_start, _)) = spans.get(idx + 1) else {
        return true;
    };
    let gap = &body[end..next_start];
    if gap.contains('\n') {
        return true;
    }
    let terminator = matches!(&body[start..end], "." | "!" | "?");
    terminator && !gap.is_empty()
}
