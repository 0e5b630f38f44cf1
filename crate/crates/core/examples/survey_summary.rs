//! Aggregates Likert ratings into per-criterion mean and standard deviation.

use std::path::Path;

use scenario_rag::harness::{aggregate_survey, load_ratings, render_report, Deviation, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample/ratings.csv"));
    let records = load_ratings(&path)?;
    let summary = aggregate_survey(&records, Deviation::Population)?;
    print!("{}", render_report(&summary, ReportFormat::Text));
    Ok(())
}
