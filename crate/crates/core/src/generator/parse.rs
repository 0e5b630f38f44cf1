//! Tolerant parsing of backend output into a titled list of steps.

use std::sync::LazyLock;

use regex::Regex;

static STEP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(\s*)(?:(\d+)\s*[.)]|[-*•]|(?i:step)\s*\d+\s*[:.)])\s+(.*\S)\s*$").expect("valid regex")
});
static TITLE_LABEL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:#+\s*)?(?:\*\*)?(?:(?i:ts|test\s*scenario|scenario|title)\s*\d*\s*:\s*)?(?:\*\*)?").expect("valid regex")
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedScenario {
    pub title: String,
    pub steps: Vec<String>,
}

struct StepLine<'a> {
    indent: usize,
    numbered: bool,
    text: &'a str,
}

fn step_line(line: &str) -> Option<StepLine<'_>> {
    let caps = STEP.captures(line)?;
    Some(StepLine {
        indent: caps.get(1).map_or(0, |m| m.as_str().len()),
        numbered: caps.get(2).is_some(),
        text: caps.get(3)?.as_str(),
    })
}

fn clean_title(line: &str) -> String {
    let stripped = TITLE_LABEL.replace(line.trim(), "");
    stripped.trim().trim_end_matches("**").trim().to_owned()
}

/// Splits raw model output into a title and its steps.
///
/// The first non-empty line is the title, minus any heading marker or
/// `TS:`-style label. Lines starting with `1.`, `2)`, `-`, `*` or `Step 3:`
/// are steps; numbering gaps are ignored. Indented bullets below a numbered
/// step and unmarked lines after the first step are folded into the step
/// above them. Returns `None` when no step is found.
pub fn parse_scenario_output(raw: &str) -> Option<ParsedScenario> {
    let mut lines = raw.lines().filter(|l| !l.trim().is_empty()).peekable();
    let first = *lines.peek()?;
    let title = if step_line(first).is_some() {
        String::new()
    } else {
        lines.next();
        clean_title(first)
    };

    let mut steps: Vec<String> = Vec::new();
    let mut last_numbered_indent: Option<usize> = None;
    for line in lines {
        match step_line(line) {
            Some(step) if step.numbered => {
                last_numbered_indent = Some(step.indent);
                steps.push(step.text.to_owned());
            }
            Some(step) if last_numbered_indent.is_some_and(|i| step.indent > i) => {
                append(&mut steps, step.text);
            }
            Some(step) => steps.push(step.text.to_owned()),
            None if !steps.is_empty() => append(&mut steps, line.trim()),
            None => {}
        }
    }
    (!steps.is_empty()).then_some(ParsedScenario { title, steps })
}

fn append(steps: &mut [String], text: &str) {
    if let Some(last) = steps.last_mut() {
        last.push(' ');
        last.push_str(text);
    }
}

/// Canonical text form: the title line followed by `1.`-numbered steps.
pub fn render_scenario(title: &str, steps: &[String]) -> String {
    let mut out = String::from(title);
    for (i, step) in steps.iter().enumerate() {
        out.push('\n');
        out.push_str(&format!("{}. {}", i + 1, step));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(raw: &str) -> ParsedScenario {
        parse_scenario_output(raw).expect("parses")
    }

    #[test]
    fn numbered_steps() {
        let p = parse("Scenario A\n1. open app\n2. scan packet");
        assert_eq!(p.title, "Scenario A");
        assert_eq!(p.steps, vec!["open app", "scan packet"]);
    }

    #[test]
    fn heading_label_and_bullets() {
        let p = parse("## TS1: Delivery\n- step one\n- step two\n- step three");
        assert_eq!(p.title, "Delivery");
        assert_eq!(p.steps.len(), 3);
    }

    #[test]
    fn no_steps_is_an_error() {
        assert_eq!(parse_scenario_output("no steps here at all"), None);
        assert_eq!(parse_scenario_output(""), None);
    }

    #[test]
    fn gaps_parentheses_and_expected_results() {
        let raw = "TS: Delivery with Rücksendung Ausland.\n\n\
                   1) Open the LIEF_POST app in VB mode. The start screen is shown.\n\
                   4) Scan the parcel.\n   - Expected: the ZAB list is checked.\n\
                   7) Sign.\n   continuation text";
        let p = parse(raw);
        assert_eq!(p.title, "Delivery with Rücksendung Ausland.");
        assert_eq!(
            p.steps,
            vec![
                "Open the LIEF_POST app in VB mode. The start screen is shown.",
                "Scan the parcel. Expected: the ZAB list is checked.",
                "Sign. continuation text",
            ]
        );
    }

    #[test]
    fn bold_markdown_title() {
        assert_eq!(parse("**Test Scenario 2: Pickup**\nStep 1: go").title, "Pickup");
    }

    #[test]
    fn output_starting_with_a_step_has_empty_title() {
        let p = parse("1. a\n2. b");
        assert_eq!(p.title, "");
        assert_eq!(p.steps, vec!["a", "b"]);
    }

    proptest! {
        #[test]
        fn render_then_parse_round_trips(
            title in "[A-Za-zÄÖÜäöü][A-Za-z0-9ÄÖÜäöüß ,.'()]{0,40}[A-Za-z0-9.)]",
            steps in prop::collection::vec("[A-Za-z0-9ÄÖÜäöüß][A-Za-z0-9ÄÖÜäöüß ,.:;'()%-]{0,60}[A-Za-z0-9.)%]", 1..12),
        ) {
            prop_assume!(clean_title(&title) == title && step_line(&title).is_none());
            let rendered = render_scenario(&title, &steps);
            let parsed = parse(&rendered);
            prop_assert_eq!(parsed.title, title);
            prop_assert_eq!(parsed.steps, steps);
        }
    }
}
