//! The backend × prompt mode × k evaluation grid.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::{GlossaryEntry, RequirementsSet, ScenarioRequest};
use crate::embedding::Embedder;
use crate::generator::{
    generate_scenario_with, parse_scenario_output, render_scenario, Backend, BackendProfile, GeneratedScenario,
    GenerationConfig, GenerationInputs,
};
use crate::metrics::{mean_report, pooled_bleu, score_pair, MetricParams, MetricReport};
use crate::prompt::{PromptMode, PromptTemplate};
use crate::vector_index::VectorIndex;

/// A scenario request with the reference scenario it is scored against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioCase {
    pub scenario_id: String,
    pub request: ScenarioRequest,
    pub reference: String,
}

#[derive(Debug, Clone, Copy)]
pub struct GridInputs<'a> {
    pub reqs: &'a RequirementsSet,
    pub cases: &'a [ScenarioCase],
    pub glossary: &'a [GlossaryEntry],
    pub index: &'a VectorIndex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigGrid {
    backends: Vec<BackendProfile>,
    modes: Vec<PromptMode>,
    k_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCell {
    pub backend: BackendProfile,
    pub mode: PromptMode,
    pub k: usize,
}

impl ConfigGrid {
    /// Modes are put in zero-shot, few-shot order and k values ascending;
    /// duplicates are dropped. Backends keep their given order.
    pub fn new(backends: Vec<BackendProfile>, modes: Vec<PromptMode>, k_values: Vec<usize>) -> Result<Self, HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if backends.is_empty() || modes.is_empty() || k_values.is_empty() {
            return bad("a grid needs at least one backend, one prompt mode and one k".into());
        }
        let mut ids = BTreeSet::new();
        for b in &backends {
            b.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            if !ids.insert(b.backend_id.as_str()) {
                return bad(format!("backend id `{}` appears twice", b.backend_id));
            }
        }
        if k_values.contains(&0) {
            return bad("k values must be positive".into());
        }
        let modes: Vec<PromptMode> = [PromptMode::ZeroShot, PromptMode::FewShot]
            .into_iter()
            .filter(|m| modes.contains(m))
            .collect();
        let k_values: Vec<usize> = k_values.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Ok(Self {
            backends,
            modes,
            k_values,
        })
    }

    pub fn backends(&self) -> &[BackendProfile] {
        &self.backends
    }

    pub fn modes(&self) -> &[PromptMode] {
        &self.modes
    }

    pub fn k_values(&self) -> &[usize] {
        &self.k_values
    }

    pub fn cell_count(&self) -> usize {
        self.backends.len() * self.modes.len() * self.k_values.len()
    }

    /// Cells ordered by backend, then mode, then k.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::with_capacity(self.cell_count());
        for backend in &self.backends {
            for &mode in &self.modes {
                for &k in &self.k_values {
                    cells.push(GridCell {
                        backend: backend.clone(),
                        mode,
                        k,
                    });
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Cells run at once; 1 runs them one after another.
    pub workers: usize,
    pub metrics: MetricParams,
    pub template: PromptTemplate,
    /// Overrides every backend's default budget.
    pub token_budget: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            metrics: MetricParams::default(),
            template: PromptTemplate::default(),
            token_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Every request was skipped, e.g. few-shot without examples.
    Skipped,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Skipped => "skipped",
            CellStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario_id: String,
    pub report: MetricReport,
    pub generated: GeneratedScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub backend_id: String,
    pub model_name: String,
    pub mode: PromptMode,
    pub k: usize,
    pub status: CellStatus,
    /// Mean over the scored scenarios; `None` unless the cell succeeded.
    pub report: Option<MetricReport>,
    pub scenarios: Vec<ScenarioOutcome>,
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<CellResult>,
}

/// Text scored against a reference: the canonical rendering when the text
/// parses as a scenario, the trimmed text otherwise.
pub fn canonical_text(text: &str) -> String {
    match parse_scenario_output(text) {
        Some(p) => render_scenario(&p.title, &p.steps),
        None => text.trim().to_owned(),
    }
}

/// Runs every cell with a fresh client per cell from each backend profile.
pub fn run_grid(
    inputs: &GridInputs<'_>,
    grid: &ConfigGrid,
    embedder: &dyn Embedder,
    options: &RunOptions,
) -> Result<GridResult, HarnessError> {
    run_grid_with(inputs, grid, embedder, options, &|p: &BackendProfile| p.connect())
}

pub fn run_grid_with(
    inputs: &GridInputs<'_>,
    grid: &ConfigGrid,
    embedder: &dyn Embedder,
    options: &RunOptions,
    connect: &(dyn Fn(&BackendProfile) -> Box<dyn Backend> + Sync),
) -> Result<GridResult, HarnessError> {
    options.metrics.validate()?;
    inputs.index.check_compatible(embedder.spec())?;
    if inputs.cases.is_empty() {
        return Err(HarnessError::Config("no scenario requests to run".into()));
    }
    let ids: BTreeSet<&str> = inputs.cases.iter().map(|c| c.scenario_id.as_str()).collect();
    if ids.len() != inputs.cases.len() {
        return Err(HarnessError::Config("scenario ids must be unique".into()));
    }

    let cells = grid.cells();
    let workers = options.workers.clamp(1, cells.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CellResult>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = cells.get(i) else { break };
                let backend = connect(&cell.backend);
                let result = run_cell(inputs, cell, embedder, backend.as_ref(), options);
                slots.lock().expect("no worker panicked")[i] = Some(result);
            });
        }
    });
    let cells = slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|c| c.expect("every cell ran"))
        .collect();
    Ok(GridResult { cells })
}

fn run_cell(
    inputs: &GridInputs<'_>,
    cell: &GridCell,
    embedder: &dyn Embedder,
    backend: &dyn Backend,
    options: &RunOptions,
) -> CellResult {
    let mut config = GenerationConfig::new(&cell.backend.backend_id, cell.mode, cell.k, cell.backend.token_limit);
    if let Some(budget) = options.token_budget {
        config = config.with_budget(budget);
    }
    let mut result = CellResult {
        backend_id: cell.backend.backend_id.clone(),
        model_name: cell.backend.model_name.clone(),
        mode: cell.mode,
        k: cell.k,
        status: CellStatus::Ok,
        report: None,
        scenarios: Vec::new(),
        skipped: Vec::new(),
    };
    let label = format!("{}/{}/k={}", cell.backend.backend_id, cell.mode, cell.k);
    let mut pairs: Vec<(String, String)> = Vec::new();

    for case in inputs.cases {
        if cell.mode == PromptMode::FewShot && !case.request.has_example() {
            info!("{label}: skipping {} (no example for few-shot)", case.scenario_id);
            result.skipped.push(case.scenario_id.clone());
            continue;
        }
        let gen_inputs = GenerationInputs {
            reqs: inputs.reqs,
            request: &case.request,
            glossary: inputs.glossary,
            index: inputs.index,
        };
        match generate_scenario_with(&options.template, &gen_inputs, &config, embedder, backend) {
            Ok(generated) => {
                let pair = (generated.render(), canonical_text(&case.reference));
                let report = score_pair(&pair.0, &pair.1, &options.metrics);
                pairs.push(pair);
                result.scenarios.push(ScenarioOutcome {
                    scenario_id: case.scenario_id.clone(),
                    report,
                    generated,
                });
            }
            Err(e) => {
                warn!("{label}: {}: {e}", case.scenario_id);
                result.status = CellStatus::Failed(format!("{}: {e}", case.scenario_id));
                result.scenarios.clear();
                return result;
            }
        }
    }

    let reports: Vec<MetricReport> = result.scenarios.iter().map(|s| s.report.clone()).collect();
    match mean_report(&reports) {
        Ok(mut mean) => {
            if options.metrics.bleu_pooled {
                mean.bleu = pooled_bleu(&pairs, &options.metrics).value;
            }
            result.report = Some(mean);
        }
        Err(_) => result.status = CellStatus::Skipped,
    }
    result
}
