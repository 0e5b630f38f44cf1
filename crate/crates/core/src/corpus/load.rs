use std::collections::HashSet;
use std::fs;
use std::path::Path;

use log::info;
use walkdir::WalkDir;

use super::{
    normalize_bytes, normalize_text, CorpusError, GlossaryEntry, OriginFormat, Requirement,
    RequirementsSet, ScenarioRequest, SourceDocument,
};

fn read(path: &Path) -> Result<Vec<u8>, CorpusError> {
    fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_utf8(path: &Path) -> Result<String, CorpusError> {
    let bytes = read(path)?;
    String::from_utf8(bytes).map_err(|e| CorpusError::Invalid {
        path: path.display().to_string(),
        message: format!("invalid UTF-8 at byte offset {}", e.utf8_error().valid_up_to()),
    })
}

/// Reads a headed CSV file and returns rows keyed by the requested columns.
fn read_table(path: &Path, columns: &[&'static str]) -> Result<Vec<Vec<String>>, CorpusError> {
    let label = path.display().to_string();
    let text = read_utf8(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let csv_err = |source| CorpusError::Csv {
        path: label.clone(),
        source,
    };

    let headers = reader.headers().map_err(csv_err)?.clone();
    let mut positions = Vec::with_capacity(columns.len());
    for column in columns {
        let pos = headers.iter().position(|h| h == *column).ok_or_else(|| CorpusError::Invalid {
            path: label.clone(),
            message: format!("header is missing column `{column}`"),
        })?;
        positions.push(pos);
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push(
            positions
                .iter()
                .map(|&p| record.get(p).unwrap_or("").to_owned())
                .collect(),
        );
    }
    Ok(rows)
}

/// Loads a `req_id,section,statement` CSV file.
pub fn load_requirements(path: impl AsRef<Path>) -> Result<RequirementsSet, CorpusError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let rows = read_table(path, &["req_id", "section", "statement"])?;

    let mut seen = HashSet::new();
    let mut requirements = Vec::with_capacity(rows.len());
    for (row_no, row) in rows.into_iter().enumerate() {
        let [req_id, section, statement]: [String; 3] = row.try_into().expect("three columns");
        let record = if req_id.is_empty() {
            format!("row {}", row_no + 1)
        } else {
            req_id.clone()
        };
        let missing = |field| CorpusError::MissingField {
            path: label.clone(),
            record: record.clone(),
            field,
        };
        if req_id.is_empty() {
            return Err(missing("req_id"));
        }
        let statement = normalize_text(&statement, OriginFormat::Plain);
        if statement.is_empty() {
            return Err(missing("statement"));
        }
        if !seen.insert(req_id.clone()) {
            return Err(CorpusError::Duplicate {
                path: label,
                kind: "req_id",
                id: req_id,
            });
        }
        requirements.push(Requirement {
            req_id,
            section,
            statement,
        });
    }
    Ok(RequirementsSet::new(requirements).expect("ids checked above"))
}

/// Loads a `term,definition` CSV file. Terms are kept byte for byte.
pub fn load_glossary(path: impl AsRef<Path>) -> Result<Vec<GlossaryEntry>, CorpusError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let rows = read_table(path, &["term", "definition"])?;

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(rows.len());
    for (row_no, row) in rows.into_iter().enumerate() {
        let [term, definition]: [String; 2] = row.try_into().expect("two columns");
        if term.is_empty() {
            return Err(CorpusError::MissingField {
                path: label,
                record: format!("row {}", row_no + 1),
                field: "term",
            });
        }
        if definition.is_empty() {
            return Err(CorpusError::MissingField {
                path: label,
                record: term,
                field: "definition",
            });
        }
        if !seen.insert(term.clone()) {
            return Err(CorpusError::Duplicate {
                path: label,
                kind: "term",
                id: term,
            });
        }
        entries.push(GlossaryEntry { term, definition });
    }
    Ok(entries)
}

/// Loads a scenario request file; see [`parse_request`] for the format.
pub fn load_request(path: impl AsRef<Path>) -> Result<ScenarioRequest, CorpusError> {
    let path = path.as_ref();
    parse_request(&read_utf8(path)?, &path.display().to_string())
}

/// Parses the key-value request format.
///
/// ```text
/// description: Delivery with Rücksendung Ausland
/// example_description: Delivery of a domestic parcel
/// example_scenario:
///     TS: Domestic delivery
///     1. Open the LIEF_POST app in VB mode.
///     2. Scan the parcel.
/// ```
///
/// Keys start at column 0. Indented lines continue the previous key and have
/// their common indentation removed. Lines starting with `#` are comments.
pub fn parse_request(text: &str, label: &str) -> Result<ScenarioRequest, CorpusError> {
    let invalid = |message: String| CorpusError::Invalid {
        path: label.to_owned(),
        message,
    };

    let mut fields: Vec<(String, Vec<String>)> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.starts_with('#') {
            continue;
        }
        if line.starts_with([' ', '\t']) || line.trim().is_empty() {
            match fields.last_mut() {
                Some((_, lines)) => lines.push(line.to_owned()),
                None if line.trim().is_empty() => {}
                None => return Err(invalid(format!("line {}: continuation without a key", line_no + 1))),
            }
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(invalid(format!("line {}: expected `key: value`", line_no + 1)));
        };
        let key = key.trim();
        if !matches!(key, "description" | "example_description" | "example_scenario") {
            return Err(invalid(format!("line {}: unknown key `{key}`", line_no + 1)));
        }
        if fields.iter().any(|(k, _)| k == key) {
            return Err(invalid(format!("line {}: key `{key}` given twice", line_no + 1)));
        }
        let mut lines = Vec::new();
        if !value.trim().is_empty() {
            lines.push(value.trim().to_owned());
        }
        fields.push((key.to_owned(), lines));
    }

    let mut take = |key: &str| -> Option<String> {
        let idx = fields.iter().position(|(k, _)| k == key)?;
        let (_, lines) = fields.remove(idx);
        let value = dedent(&lines);
        (!value.is_empty()).then_some(value)
    };
    let description = take("description");
    let example_description = take("example_description");
    let example_scenario = take("example_scenario");

    let Some(description) = description else {
        return Err(CorpusError::MissingField {
            path: label.to_owned(),
            record: "request".into(),
            field: "description",
        });
    };
    let request = ScenarioRequest {
        description,
        example_description,
        example_scenario,
    };
    request.validate().map_err(invalid)?;
    Ok(request)
}

fn dedent(lines: &[String]) -> String {
    let indent = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let body: Vec<&str> = lines
        .iter()
        .map(|l| if l.trim().is_empty() { "" } else { l[indent..].trim_end() })
        .collect();
    body.join("\n").trim_matches('\n').to_owned()
}

/// Loads every `.txt`, `.md` and `.html` file below `dir`.
///
/// Documents are returned sorted by id (the `/`-separated relative path).
/// Files that normalize to an empty body are skipped.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<SourceDocument>, CorpusError> {
    let dir = dir.as_ref();
    let mut docs = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: dir.display().to_string(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let Some(origin) = path
            .extension()
            .and_then(|e| e.to_str())
            .and_then(OriginFormat::from_extension)
        else {
            continue;
        };
        let rel = path.strip_prefix(dir).unwrap_or(path);
        let doc_id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let body = normalize_bytes(&read(path)?, origin).map_err(|e| CorpusError::Invalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if body.is_empty() {
            info!("skipping {doc_id}: empty after normalization");
            continue;
        }
        let title = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| doc_id.clone());
        docs.push(SourceDocument {
            doc_id,
            title,
            body,
            origin_format: origin,
        });
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs)
}
