//! Placeholder templates for prompt rendering.
//!
//! A template is split into blocks, each starting at a `## ` header line. A
//! block whose placeholders all refer to absent sections is left out
//! entirely, which is how the example block disappears from zero-shot prompts
//! and the context and glossary blocks disappear from retrieval queries. A
//! line holding only a placeholder that expands to nothing is dropped.

use std::fmt;
use std::path::Path;

use super::PromptError;

pub const DEFAULT_TEMPLATE: &str = "\
## TASK
{{TASK}}
## REQUIREMENTS
{{REQUIREMENTS}}
## SCENARIO
{{SCENARIO}}
## EXAMPLE
{{EXAMPLE}}
## CONTEXT
{{CONTEXT}}
## GLOSSARY
{{GLOSSARY}}
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Task,
    Requirements,
    Scenario,
    Example,
    Context,
    Glossary,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Slot::Task,
        Slot::Requirements,
        Slot::Scenario,
        Slot::Example,
        Slot::Context,
        Slot::Glossary,
    ];

    pub fn marker(self) -> &'static str {
        match self {
            Slot::Task => "{{TASK}}",
            Slot::Requirements => "{{REQUIREMENTS}}",
            Slot::Scenario => "{{SCENARIO}}",
            Slot::Example => "{{EXAMPLE}}",
            Slot::Context => "{{CONTEXT}}",
            Slot::Glossary => "{{GLOSSARY}}",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    source: String,
}

impl PromptTemplate {
    pub fn parse(source: impl Into<String>) -> Result<Self, PromptError> {
        let source = source.into();
        let mut rest = source.as_str();
        while let Some(open) = rest.find("{{") {
            let after = &rest[open..];
            let close = after
                .find("}}")
                .ok_or_else(|| PromptError::Template("unterminated `{{`".into()))?;
            let marker = &after[..close + 2];
            if !Slot::ALL.iter().any(|s| s.marker() == marker) {
                return Err(PromptError::Template(format!("unknown placeholder {marker}")));
            }
            rest = &after[close + 2..];
        }
        for required in [Slot::Task, Slot::Scenario] {
            if !source.contains(required.marker()) {
                return Err(PromptError::Template(format!(
                    "template must contain {}",
                    required.marker()
                )));
            }
        }
        Ok(Self { source })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::Template(format!("{}: {e}", path.display())))?;
        Self::parse(text)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Expands the template. `fill` returns `None` for an absent section.
    pub(crate) fn render(&self, fill: impl Fn(Slot) -> Option<String>) -> String {
        let mut out: Vec<String> = Vec::new();
        for block in blocks(&self.source) {
            let slots: Vec<Slot> = Slot::ALL
                .into_iter()
                .filter(|s| block.iter().any(|l| l.contains(s.marker())))
                .collect();
            if !slots.is_empty() && slots.iter().all(|s| fill(*s).is_none()) {
                continue;
            }
            for line in block {
                let mut expanded = line.to_owned();
                for slot in &slots {
                    if expanded.contains(slot.marker()) {
                        expanded = expanded.replace(slot.marker(), &fill(*slot).unwrap_or_default());
                    }
                }
                let only_placeholder = slots.iter().any(|s| line.trim() == s.marker());
                if only_placeholder && expanded.trim().is_empty() {
                    continue;
                }
                out.push(expanded);
            }
        }
        while out.last().is_some_and(|l| l.trim().is_empty()) {
            out.pop();
        }
        out.join("\n")
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            source: DEFAULT_TEMPLATE.to_owned(),
        }
    }
}

impl fmt::Display for PromptTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn blocks(source: &str) -> Vec<Vec<&str>> {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    for line in source.lines() {
        if line.starts_with("## ") || blocks.is_empty() {
            blocks.push(Vec::new());
        }
        blocks.last_mut().expect("pushed above").push(line);
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_template_parses() {
        assert!(PromptTemplate::parse(DEFAULT_TEMPLATE).is_ok());
    }

    #[test]
    fn unknown_placeholder() {
        assert!(PromptTemplate::parse("{{TASK}} {{SCENARIO}} {{FOO}}").is_err());
        assert!(PromptTemplate::parse("{{TASK}}").is_err());
    }

    #[test]
    fn absent_blocks_are_skipped() {
        let t = PromptTemplate::default();
        let text = t.render(|s| match s {
            Slot::Task => Some("do it".into()),
            Slot::Scenario => Some("scenario".into()),
            Slot::Requirements => Some("- [R1] x".into()),
            Slot::Context => Some(String::new()),
            _ => None,
        });
        assert_eq!(
            text,
            "## TASK\ndo it\n## REQUIREMENTS\n- [R1] x\n## SCENARIO\nscenario\n## CONTEXT"
        );
    }

    #[test]
    fn custom_template_with_inline_markers() {
        let t = PromptTemplate::parse("Instruction: {{TASK}}\nWhat: {{SCENARIO}}\n## NOTES\n{{GLOSSARY}}").unwrap();
        let text = t.render(|s| match s {
            Slot::Task => Some("go".into()),
            Slot::Scenario => Some("thing".into()),
            _ => None,
        });
        assert_eq!(text, "Instruction: go\nWhat: thing");
    }
}
