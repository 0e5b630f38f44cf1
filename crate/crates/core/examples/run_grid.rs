//! Runs the sample 2 x 2 x 2 configuration grid with mock backends.

use std::path::Path;

use scenario_rag::harness::{render_report, GridConfig, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample/grid.toml");
    let config = GridConfig::load(path)?;
    let result = config.run()?;
    print!("{}", render_report(&result, ReportFormat::Text));
    println!();
    print!("{}", render_report(&result, ReportFormat::Csv));
    Ok(())
}
