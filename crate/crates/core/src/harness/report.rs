//! CSV and aligned-text renderings of grid and survey results.

use std::collections::BTreeSet;

use super::grid::{CellStatus, GridResult};
use super::survey::SurveySummary;
use crate::generator::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Full precision.
    Csv,
    /// Three decimals.
    Text,
}

pub trait Report {
    fn to_csv(&self) -> String;
    fn to_text(&self) -> String;
}

pub fn render_report(report: &dyn Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Text => report.to_text(),
    }
}

fn csv_string(rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
}

/// Left-aligns the first `left` columns and right-aligns the rest.
fn aligned(rows: &[Vec<String>], left: usize) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c < left {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn full(x: f64) -> String {
    format!("{x}")
}

fn three(x: f64) -> String {
    format!("{x:.3}")
}

impl GridResult {
    fn detail_keys(&self) -> Vec<String> {
        self.cells
            .iter()
            .filter_map(|c| c.report.as_ref())
            .flat_map(|r| r.detail.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// One row per generated scenario.
    pub fn scenarios_csv(&self) -> String {
        let mut rows = vec![
            ["backend_id", "mode", "k", "scenario_id", "bleu", "rouge", "meteor", "included_k", "prompt_tokens", "prompt_sha256", "output_sha256"]
                .map(String::from)
                .to_vec(),
        ];
        for cell in &self.cells {
            for s in &cell.scenarios {
                let p = &s.generated.provenance;
                rows.push(vec![
                    cell.backend_id.clone(),
                    cell.mode.to_string(),
                    cell.k.to_string(),
                    s.scenario_id.clone(),
                    full(s.report.bleu),
                    full(s.report.rouge),
                    full(s.report.meteor),
                    p.included_k.to_string(),
                    p.prompt_tokens.to_string(),
                    p.prompt_sha256.clone(),
                    sha256_hex(&s.generated.raw_output),
                ]);
            }
        }
        csv_string(&rows)
    }

    /// Every generated scenario as one JSON object per line.
    pub fn scenarios_jsonl(&self) -> String {
        let mut out = String::new();
        for cell in &self.cells {
            for s in &cell.scenarios {
                let line = serde_json::json!({
                    "backend_id": cell.backend_id,
                    "mode": cell.mode,
                    "k": cell.k,
                    "scenario_id": s.scenario_id,
                    "scenario": s.generated,
                });
                out.push_str(&line.to_string());
                out.push('\n');
            }
        }
        out
    }
}

impl Report for GridResult {
    fn to_csv(&self) -> String {
        let keys = self.detail_keys();
        let mut header: Vec<String> = ["backend_id", "model", "mode", "k", "status", "scenarios", "skipped", "bleu", "rouge", "meteor"]
            .map(String::from)
            .to_vec();
        header.extend(keys.iter().cloned());
        header.push("message".into());
        let mut rows = vec![header];
        for cell in &self.cells {
            let mut row = vec![
                cell.backend_id.clone(),
                cell.model_name.clone(),
                cell.mode.to_string(),
                cell.k.to_string(),
                cell.status.label().to_owned(),
                cell.scenarios.len().to_string(),
                cell.skipped.len().to_string(),
            ];
            match &cell.report {
                Some(r) => {
                    row.extend(r.scores().map(full));
                    row.extend(keys.iter().map(|k| r.detail.get(k).map(|v| full(*v)).unwrap_or_default()));
                }
                None => row.extend(std::iter::repeat_n(String::new(), 3 + keys.len())),
            }
            row.push(match &cell.status {
                CellStatus::Failed(m) => m.clone(),
                _ => String::new(),
            });
            rows.push(row);
        }
        csv_string(&rows)
    }

    fn to_text(&self) -> String {
        let mut rows = vec![["LLM", "Prompt", "Chunks", "BLEU", "ROUGE", "METEOR"].map(String::from).to_vec()];
        for cell in &self.cells {
            let mut row = vec![cell.backend_id.clone(), cell.mode.short().to_owned(), cell.k.to_string()];
            match (&cell.report, &cell.status) {
                (Some(r), _) => row.extend(r.scores().map(three)),
                (None, status) => row.extend(std::iter::repeat_n(status.label().to_uppercase(), 3)),
            }
            rows.push(row);
        }
        aligned(&rows, 2)
    }
}

fn mu_sigma(mean: Option<f64>, sd: Option<f64>) -> String {
    match (mean, sd) {
        (Some(m), Some(s)) => format!("{m:.2} ({s:.2})"),
        _ => "n/a".to_owned(),
    }
}

impl Report for SurveySummary {
    fn to_csv(&self) -> String {
        let mut rows = vec![
            ["criterion", "n", "mean", "std_dev", "r1", "r2", "r3", "r4", "r5"].map(String::from).to_vec(),
        ];
        for c in &self.criteria {
            let mut row = vec![
                c.criterion.key().to_owned(),
                c.count.to_string(),
                c.mean.map(full).unwrap_or_default(),
                c.std_dev.map(full).unwrap_or_default(),
            ];
            row.extend(c.histogram.iter().map(usize::to_string));
            rows.push(row);
        }
        csv_string(&rows)
    }

    fn to_text(&self) -> String {
        let mut rows = vec![["Criterion", "μ (σ)", "n", "1", "2", "3", "4", "5"].map(String::from).to_vec()];
        for c in &self.criteria {
            let mut row = vec![c.criterion.label().to_owned(), mu_sigma(c.mean, c.std_dev), c.count.to_string()];
            row.extend(c.histogram.iter().map(usize::to_string));
            rows.push(row);
        }
        let mut out = aligned(&rows, 2);
        out.push_str(&format!("{} scenarios", self.scenarios));
        if !self.excluded_scenarios.is_empty() {
            out.push_str(&format!("; excluded: {}", self.excluded_scenarios.join(", ")));
        }
        out.push('\n');
        out
    }
}
