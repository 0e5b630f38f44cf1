//! Offline backend that derives its answer from the prompt text alone.

use super::{Backend, BackendError, CompletionRequest};
use crate::corpus::token_spans;
use crate::prompt::AssembledPrompt;

const CONTEXT_PREVIEW_TOKENS: usize = 8;
const FINAL_STEP: &str = "Verify expected results.";

/// Lines of the last `header` block, up to the next `## ` header.
fn block_after<'a>(lines: &[&'a str], header: &str) -> Vec<&'a str> {
    let Some(start) = lines.iter().rposition(|l| l.trim_end() == header) else {
        return Vec::new();
    };
    lines[start + 1..]
        .iter()
        .take_while(|l| !l.starts_with("## "))
        .filter(|l| !l.trim().is_empty())
        .copied()
        .collect()
}

fn first_tokens(text: &str, n: usize) -> &str {
    let spans = token_spans(text);
    match (spans.first(), spans.get(n.min(spans.len()).saturating_sub(1))) {
        (Some(&(start, _)), Some(&(_, end))) if n > 0 => &text[start..end],
        _ => "",
    }
}

/// Answers with a scenario whose title is the prompt's scenario description
/// and whose steps echo each context passage and glossary term.
pub fn mock_backend(prompt: &AssembledPrompt) -> String {
    mock_completion(&prompt.text)
}

pub(crate) fn mock_completion(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let title = block_after(&lines, "## SCENARIO")
        .first()
        .map_or("Untitled scenario", |l| l.trim());

    let mut steps = Vec::new();
    for line in block_after(&lines, "## CONTEXT") {
        let Some(rest) = line.strip_prefix('[') else { continue };
        let Some((rank, passage)) = rest.split_once("] ") else { continue };
        steps.push(format!(
            "Apply context {rank}: {}",
            first_tokens(passage, CONTEXT_PREVIEW_TOKENS)
        ));
    }
    for line in block_after(&lines, "## GLOSSARY") {
        let term = line.split_once(": ").map_or(line, |(t, _)| t);
        steps.push(format!("Verify term {}", term.trim()));
    }
    steps.push(FINAL_STEP.to_owned());

    let mut out = format!("TS: {title}");
    for (i, step) in steps.iter().enumerate() {
        out.push_str(&format!("\n{}. {step}", i + 1));
    }
    out
}

/// [`Backend`] wrapper around [`mock_backend`].
#[derive(Debug, Clone)]
pub struct MockBackend {
    backend_id: String,
}

impl MockBackend {
    pub fn new(backend_id: impl Into<String>) -> Self {
        Self {
            backend_id: backend_id.into(),
        }
    }
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new("mock")
    }
}

impl Backend for MockBackend {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        Ok(mock_backend(request.prompt))
    }
}
