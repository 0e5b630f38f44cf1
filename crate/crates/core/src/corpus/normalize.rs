//! Conversion of raw documentation into normalized plain text.

use pulldown_cmark::{Event, Parser, Tag, TagEnd};
use unicode_normalization::UnicodeNormalization;

use super::{CorpusError, OriginFormat};

/// Validates `raw` as UTF-8 and normalizes it.
pub fn normalize_bytes(raw: &[u8], origin: OriginFormat) -> Result<String, CorpusError> {
    let text = std::str::from_utf8(raw).map_err(|e| CorpusError::Encoding {
        offset: e.valid_up_to(),
    })?;
    Ok(normalize_text(text, origin))
}

/// Strips markup, collapses whitespace and applies NFC.
///
/// Whitespace runs that contain a line break become a single `\n`, every
/// other run becomes a single space. Control characters other than line
/// breaks are dropped. Letter case is never touched.
pub fn normalize_text(raw: &str, origin: OriginFormat) -> String {
    let plain = match origin {
        OriginFormat::Plain => collapse_whitespace(raw),
        OriginFormat::Markdown => collapse_whitespace(&markdown_to_text(raw)),
        OriginFormat::Html => collapse_whitespace(&html_to_text(raw)),
    };
    plain.nfc().collect()
}

fn is_line_break(ch: char) -> bool {
    matches!(
        ch,
        '\n' | '\r' | '\u{0B}' | '\u{0C}' | '\u{85}' | '\u{2028}' | '\u{2029}'
    )
}

#[derive(Clone, Copy, PartialEq)]
enum Pending {
    None,
    Space,
    Newline,
}

pub(crate) fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending = Pending::None;
    for ch in text.chars() {
        if is_line_break(ch) {
            pending = Pending::Newline;
        } else if ch.is_whitespace() {
            if pending != Pending::Newline {
                pending = Pending::Space;
            }
        } else if ch.is_control() {
            continue;
        } else {
            if !out.is_empty() {
                match pending {
                    Pending::Space => out.push(' '),
                    Pending::Newline => out.push('\n'),
                    Pending::None => {}
                }
            }
            pending = Pending::None;
            out.push(ch);
        }
    }
    out
}

fn markdown_to_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for event in Parser::new(raw) {
        match event {
            Event::Text(text) | Event::Code(text) => out.push_str(&text),
            Event::SoftBreak => out.push(' '),
            Event::HardBreak | Event::Rule => out.push('\n'),
            Event::Start(Tag::Item) | Event::Start(Tag::TableRow) => out.push('\n'),
            Event::Start(Tag::TableCell) | Event::End(TagEnd::TableCell) => out.push(' '),
            Event::End(
                TagEnd::Paragraph
                | TagEnd::Heading(_)
                | TagEnd::CodeBlock
                | TagEnd::BlockQuote(_)
                | TagEnd::Item
                | TagEnd::TableHead
                | TagEnd::TableRow,
            ) => out.push('\n'),
            // inline html is markup, not content
            _ => {}
        }
    }
    out
}

const BLOCK_TAGS: &[&str] = &[
    "p", "br", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table",
    "section", "article", "header", "footer", "pre", "blockquote", "title", "dt", "dd", "hr",
];

fn html_to_text(raw: &str) -> String {
    let mut text = String::with_capacity(raw.len());
    let mut rest = raw;

    while let Some(lt) = rest.find('<') {
        push_html_text(&mut text, &rest[..lt]);
        let after = &rest[lt..];

        if let Some(body) = after.strip_prefix("<!--") {
            rest = match body.find("-->") {
                Some(end) => &body[end + 3..],
                None => "",
            };
            continue;
        }

        let starts_tag = after[1..]
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?');
        if !starts_tag {
            text.push('<');
            rest = &after[1..];
            continue;
        }

        let Some(gt) = after.find('>') else {
            // unterminated tag: drop the remainder
            rest = "";
            break;
        };
        let name = tag_name(&after[1..gt]);
        rest = &after[gt + 1..];

        if name == "script" || name == "style" {
            let close = format!("</{name}");
            rest = match find_ascii_ci(rest, &close) {
                Some(pos) => match rest[pos..].find('>') {
                    Some(end) => &rest[pos + end + 1..],
                    None => "",
                },
                None => "",
            };
            continue;
        }
        if BLOCK_TAGS.contains(&name.as_str()) {
            text.push('\n');
        }
    }
    push_html_text(&mut text, rest);

    html_escape::decode_html_entities(&text).into_owned()
}

/// Source whitespace in HTML is insignificant; only block tags break lines.
fn push_html_text(out: &mut String, segment: &str) {
    out.extend(
        segment
            .chars()
            .map(|c| if c.is_whitespace() { ' ' } else { c }),
    );
}

fn tag_name(inner: &str) -> String {
    inner
        .trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let hay = haystack.as_bytes();
    let pat = needle.as_bytes();
    if pat.len() > hay.len() {
        return None;
    }
    (0..=hay.len() - pat.len()).find(|&i| hay[i..i + pat.len()].eq_ignore_ascii_case(pat))
}
