//! BLEU, ROUGE and METEOR on a shared tokenization, each scaled to `[0, 1]`.

mod bleu;
mod meteor;
mod rouge;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use meteor::{align, count_chunks, stem, Alignment};

use crate::corpus::tokenize;
use bleu::BleuStats;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("invalid metric parameters: {0}")]
    InvalidParams(String),
}

/// A score plus whether an input was empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    fn new(value: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            degenerate: false,
        }
    }

    fn degenerate() -> Self {
        Self {
            value: 0.0,
            degenerate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RougeVariant {
    #[serde(rename = "rouge_1")]
    Rouge1,
    #[serde(rename = "rouge_2")]
    Rouge2,
    #[serde(rename = "rouge_l")]
    RougeL,
}

impl RougeVariant {
    pub fn key(self) -> &'static str {
        match self {
            RougeVariant::Rouge1 => "rouge_1",
            RougeVariant::Rouge2 => "rouge_2",
            RougeVariant::RougeL => "rouge_l",
        }
    }
}

impl fmt::Display for RougeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for RougeVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "rouge_1" | "1" => Ok(RougeVariant::Rouge1),
            "rouge_2" | "2" => Ok(RougeVariant::Rouge2),
            "rouge_l" | "l" => Ok(RougeVariant::RougeL),
            other => Err(format!("unknown ROUGE variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Search nodes per alignment before settling for the best seen.
    pub node_limit: usize,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
            node_limit: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    pub bleu_max_n: usize,
    /// `Some(eps)` replaces a zero n-gram match count with `eps`.
    pub bleu_smoothing: Option<f64>,
    /// Corpus BLEU from pooled n-gram counts instead of the mean of
    /// sentence scores.
    pub bleu_pooled: bool,
    /// Variants reported in the detail map. The headline is always ROUGE-L.
    pub rouge_variants: BTreeSet<RougeVariant>,
    pub meteor: MeteorParams,
    pub lowercase: bool,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            bleu_max_n: 4,
            bleu_smoothing: None,
            bleu_pooled: false,
            rouge_variants: BTreeSet::from([RougeVariant::RougeL]),
            meteor: MeteorParams::default(),
            lowercase: true,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: &str| Err(MetricsError::InvalidParams(m.to_owned()));
        if self.bleu_max_n == 0 {
            return bad("bleu_max_n must be at least 1");
        }
        if let Some(eps) = self.bleu_smoothing {
            if !(eps > 0.0 && eps <= 1.0) {
                return bad("bleu_smoothing must lie in (0, 1]");
            }
        }
        let m = &self.meteor;
        if !(m.alpha > 0.0 && m.alpha <= 1.0) {
            return bad("meteor alpha must lie in (0, 1]");
        }
        if !(m.beta > 0.0 && m.beta.is_finite()) {
            return bad("meteor beta must be positive");
        }
        if !(0.0..=1.0).contains(&m.gamma) {
            return bad("meteor gamma must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Lowercases (by default) and splits with the shared token rule.
pub fn metric_tokenize(text: &str, params: &MetricParams) -> Vec<String> {
    if params.lowercase {
        tokenize(&text.to_lowercase()).into_iter().map(str::to_owned).collect()
    } else {
        tokenize(text).into_iter().map(str::to_owned).collect()
    }
}

pub fn bleu(candidate: &str, reference: &str, params: &MetricParams) -> Score {
    let (c, r) = (metric_tokenize(candidate, params), metric_tokenize(reference, params));
    bleu_tokens(&c, &r, params)
}

pub fn bleu_tokens(candidate: &[String], reference: &[String], params: &MetricParams) -> Score {
    BleuStats::of(candidate, reference, params.bleu_max_n).score(params.bleu_smoothing)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RougeScores {
    /// ROUGE-L F1.
    pub headline: Score,
    /// Every requested variant, keyed `rouge_1`, `rouge_2`, `rouge_l`.
    pub variants: BTreeMap<String, f64>,
}

pub fn rouge(candidate: &str, reference: &str, params: &MetricParams) -> RougeScores {
    let (c, r) = (metric_tokenize(candidate, params), metric_tokenize(reference, params));
    rouge_tokens(&c, &r, params)
}

pub fn rouge_tokens(candidate: &[String], reference: &[String], params: &MetricParams) -> RougeScores {
    let degenerate = candidate.is_empty() || reference.is_empty();
    let value = |v: RougeVariant| match v {
        RougeVariant::Rouge1 => rouge::rouge_n(candidate, reference, 1),
        RougeVariant::Rouge2 => rouge::rouge_n(candidate, reference, 2),
        RougeVariant::RougeL => rouge::rouge_l(candidate, reference),
    };
    let headline = if degenerate {
        Score::degenerate()
    } else {
        Score::new(value(RougeVariant::RougeL))
    };
    let variants = params
        .rouge_variants
        .iter()
        .map(|&v| (v.key().to_owned(), if degenerate { 0.0 } else { value(v).clamp(0.0, 1.0) }))
        .collect();
    RougeScores { headline, variants }
}

pub fn meteor(candidate: &str, reference: &str, params: &MetricParams) -> Score {
    let (c, r) = (metric_tokenize(candidate, params), metric_tokenize(reference, params));
    meteor_tokens(&c, &r, params)
}

pub fn meteor_tokens(candidate: &[String], reference: &[String], params: &MetricParams) -> Score {
    meteor::meteor(candidate, reference, &params.meteor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub rouge: f64,
    pub meteor: f64,
    pub detail: BTreeMap<String, f64>,
    /// Set when an empty candidate or reference forced a zero.
    pub degenerate: bool,
}

impl MetricReport {
    pub fn scores(&self) -> [f64; 3] {
        [self.bleu, self.rouge, self.meteor]
    }
}

/// All three metrics over one tokenization of each text.
pub fn score_pair(candidate: &str, reference: &str, params: &MetricParams) -> MetricReport {
    let (c, r) = (metric_tokenize(candidate, params), metric_tokenize(reference, params));
    let b = bleu_tokens(&c, &r, params);
    let rg = rouge_tokens(&c, &r, params);
    let m = meteor_tokens(&c, &r, params);
    MetricReport {
        bleu: b.value,
        rouge: rg.headline.value,
        meteor: m.value,
        detail: rg.variants,
        degenerate: b.degenerate || rg.headline.degenerate || m.degenerate,
    }
}

/// Scores every pair, in input order. Large inputs are spread over threads.
pub fn score_pairs<C, R>(pairs: &[(C, R)], params: &MetricParams) -> Vec<MetricReport>
where
    C: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    let one = |(c, r): &(C, R)| score_pair(c.as_ref(), r.as_ref(), params);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    if pairs.len() < 64 || workers == 1 {
        return pairs.iter().map(one).collect();
    }
    let chunk = pairs.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(one).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scoring thread panicked"))
            .collect()
    })
}

/// Arithmetic mean of per-pair reports, summed in input order.
pub fn mean_report(reports: &[MetricReport]) -> Result<MetricReport, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let mut detail = BTreeMap::new();
    for key in reports.iter().flat_map(|r| r.detail.keys()).collect::<BTreeSet<_>>() {
        detail.insert(key.clone(), mean(&|r| r.detail.get(key).copied().unwrap_or(0.0)));
    }
    Ok(MetricReport {
        bleu: mean(&|r| r.bleu).clamp(0.0, 1.0),
        rouge: mean(&|r| r.rouge).clamp(0.0, 1.0),
        meteor: mean(&|r| r.meteor).clamp(0.0, 1.0),
        detail,
        degenerate: reports.iter().any(|r| r.degenerate),
    })
}

/// Corpus-level report: per-pair means, or pooled BLEU when requested.
pub fn score_corpus<C, R>(pairs: &[(C, R)], params: &MetricParams) -> Result<MetricReport, MetricsError>
where
    C: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    params.validate()?;
    let mut report = mean_report(&score_pairs(pairs, params))?;
    if params.bleu_pooled {
        report.bleu = pooled_bleu(pairs, params).value;
    }
    Ok(report)
}

/// BLEU over n-gram counts and lengths summed across all pairs.
pub fn pooled_bleu<C: AsRef<str>, R: AsRef<str>>(pairs: &[(C, R)], params: &MetricParams) -> Score {
    let mut total = BleuStats::default();
    for (c, r) in pairs {
        let (c, r) = (metric_tokenize(c.as_ref(), params), metric_tokenize(r.as_ref(), params));
        total.add(&BleuStats::of(&c, &r, params.bleu_max_n));
    }
    total.score(params.bleu_smoothing)
}
