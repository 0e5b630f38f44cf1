//! Approximate word/punctuation tokenizer.
//!
//! Whitespace separates tokens; every maximal run of letters and digits is a
//! single token and every other non-whitespace character is a token of its own.
//! The same segmentation drives chunk budgets, prompt budgets, the local
//! embedder and the metric tokenizer, so token counts agree everywhere.

/// Byte span `(start, end)` of one token inside the source text.
pub type TokenSpan = (usize, usize);

/// Returns the byte spans of every token in `text`, in order.
pub fn token_spans(text: &str) -> Vec<TokenSpan> {
    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;

    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(idx);
            }
            continue;
        }
        if let Some(start) = run_start.take() {
            spans.push((start, idx));
        }
        if !ch.is_whitespace() {
            spans.push((idx, idx + ch.len_utf8()));
        }
    }
    if let Some(start) = run_start {
        spans.push((start, text.len()));
    }
    spans
}

/// Splits `text` into token slices.
pub fn tokenize(text: &str) -> Vec<&str> {
    token_spans(text)
        .into_iter()
        .map(|(start, end)| &text[start..end])
        .collect()
}

/// Number of tokens in `text` under the approximate tokenizer.
pub fn count_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut in_run = false;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if !in_run {
                count += 1;
                in_run = true;
            }
        } else {
            in_run = false;
            if !ch.is_whitespace() {
                count += 1;
            }
        }
    }
    count
}
