//! Likert ratings: loading, exclusion and per-criterion summaries.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Relevance,
    Coverage,
    Correctness,
    /// Also accepted as `understandability`.
    Coherence,
    Feasibility,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Relevance,
        Criterion::Coverage,
        Criterion::Correctness,
        Criterion::Coherence,
        Criterion::Feasibility,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Criterion::Relevance => "relevance",
            Criterion::Coverage => "coverage",
            Criterion::Correctness => "correctness",
            Criterion::Coherence => "coherence",
            Criterion::Feasibility => "feasibility",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Relevance => "Relevance",
            Criterion::Coverage => "Coverage",
            Criterion::Correctness => "Correctness",
            Criterion::Coherence => "Coherence",
            Criterion::Feasibility => "Feasibility",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relevance" => Ok(Criterion::Relevance),
            "coverage" => Ok(Criterion::Coverage),
            "correctness" => Ok(Criterion::Correctness),
            "coherence" | "understandability" => Ok(Criterion::Coherence),
            "feasibility" => Ok(Criterion::Feasibility),
            other => Err(format!("unknown criterion `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertRecord {
    pub scenario_id: String,
    pub criterion: Criterion,
    /// 1 (strongly disagree) to 5 (strongly agree).
    pub rating: u8,
    pub excluded: bool,
}

impl LikertRecord {
    pub fn new(scenario_id: impl Into<String>, criterion: Criterion, rating: u8) -> Result<Self, HarnessError> {
        let scenario_id = scenario_id.into();
        if !(1..=5).contains(&rating) {
            return Err(HarnessError::Survey(format!(
                "scenario {scenario_id}, {criterion}: rating {rating} is outside 1..=5"
            )));
        }
        Ok(Self {
            scenario_id,
            criterion,
            rating,
            excluded: false,
        })
    }

    pub fn excluded(mut self, excluded: bool) -> Self {
        self.excluded = excluded;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: Criterion,
    pub count: usize,
    /// `None` when no rating remains for this criterion.
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    /// Counts of ratings 1 through 5.
    pub histogram: [usize; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    /// One row per criterion, in fixed order.
    pub criteria: Vec<CriterionSummary>,
    pub scenarios: usize,
    pub excluded_scenarios: Vec<String>,
    pub deviation: Deviation,
}

impl SurveySummary {
    pub fn get(&self, criterion: Criterion) -> &CriterionSummary {
        self.criteria
            .iter()
            .find(|c| c.criterion == criterion)
            .expect("every criterion has a row")
    }
}

fn mean_and_deviation(ratings: &[f64], deviation: Deviation) -> Option<(f64, f64)> {
    let n = ratings.len();
    if n == 0 {
        return None;
    }
    let mean = ratings.iter().sum::<f64>() / n as f64;
    let squares: f64 = ratings.iter().map(|r| (r - mean).powi(2)).sum();
    let divisor = match deviation {
        Deviation::Population => n as f64,
        Deviation::Sample if n > 1 => (n - 1) as f64,
        Deviation::Sample => return Some((mean, 0.0)),
    };
    Some((mean, (squares / divisor).sqrt()))
}

/// Summarizes ratings per criterion.
///
/// A scenario with any record flagged `excluded` is dropped as a whole.
pub fn aggregate_survey(records: &[LikertRecord], deviation: Deviation) -> Result<SurveySummary, HarnessError> {
    if let Some(bad) = records.iter().find(|r| !(1..=5).contains(&r.rating)) {
        return Err(HarnessError::Survey(format!(
            "scenario {}, {}: rating {} is outside 1..=5",
            bad.scenario_id, bad.criterion, bad.rating
        )));
    }
    let excluded: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.excluded)
        .map(|r| r.scenario_id.as_str())
        .collect();
    let kept: Vec<&LikertRecord> = records
        .iter()
        .filter(|r| !excluded.contains(r.scenario_id.as_str()))
        .collect();
    if kept.is_empty() {
        return Err(HarnessError::Survey("no ratings left after exclusions".into()));
    }
    let criteria = Criterion::ALL
        .into_iter()
        .map(|criterion| {
            let ratings: Vec<f64> = kept
                .iter()
                .filter(|r| r.criterion == criterion)
                .map(|r| f64::from(r.rating))
                .collect();
            let mut histogram = [0usize; 5];
            for r in kept.iter().filter(|r| r.criterion == criterion) {
                histogram[usize::from(r.rating) - 1] += 1;
            }
            let stats = mean_and_deviation(&ratings, deviation);
            CriterionSummary {
                criterion,
                count: ratings.len(),
                mean: stats.map(|s| s.0),
                std_dev: stats.map(|s| s.1),
                histogram,
            }
        })
        .collect();
    Ok(SurveySummary {
        criteria,
        scenarios: kept.iter().map(|r| r.scenario_id.as_str()).collect::<BTreeSet<_>>().len(),
        excluded_scenarios: excluded.into_iter().map(str::to_owned).collect(),
        deviation,
    })
}

fn parse_flag(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "n" => Some(false),
        "1" | "true" | "yes" | "y" => Some(true),
        _ => None,
    }
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    scenario_id: String,
    criterion: String,
    rating: String,
    #[serde(default)]
    excluded: Option<String>,
}

/// Reads `scenario_id,criterion,rating,excluded` rows; `excluded` may be
/// left empty.
pub fn load_ratings(path: impl AsRef<Path>) -> Result<Vec<LikertRecord>, HarnessError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| HarnessError::Survey(format!("{shown}: {e}")))?;
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<RatingRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| HarnessError::Survey(format!("{shown}:{line}: {e}")))?;
        let at = |m: String| HarnessError::Survey(format!("{shown}:{line}: {m}"));
        let criterion: Criterion = row.criterion.parse().map_err(at)?;
        let rating: u8 = row
            .rating
            .parse()
            .map_err(|_| at(format!("rating `{}` is not an integer in 1..=5", row.rating)))?;
        let excluded = parse_flag(row.excluded.as_deref().unwrap_or(""))
            .ok_or_else(|| at(format!("excluded flag `{}` is not a boolean", row.excluded.clone().unwrap_or_default())))?;
        let record = LikertRecord::new(row.scenario_id, criterion, rating).map_err(|e| at(e.to_string()))?;
        records.push(record.excluded(excluded));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, c: Criterion, r: u8) -> LikertRecord {
        LikertRecord::new(id, c, r).unwrap()
    }

    #[test]
    fn worked_example() {
        let records: Vec<_> = [4, 4, 5, 4]
            .iter()
            .enumerate()
            .map(|(i, &r)| rec(&format!("s{i}"), Criterion::Relevance, r))
            .collect();
        let s = aggregate_survey(&records, Deviation::Population).unwrap();
        let rel = s.get(Criterion::Relevance);
        assert_eq!(rel.mean, Some(4.25));
        assert!((rel.std_dev.unwrap() - 0.1875f64.sqrt()).abs() < 1e-15);
        assert_eq!(rel.histogram, [0, 0, 0, 3, 1]);
        assert_eq!(s.get(Criterion::Coverage).mean, None);
        assert_eq!(s.criteria.len(), 5);
    }

    #[test]
    fn equal_ratings_have_zero_spread() {
        let records = vec![rec("a", Criterion::Coverage, 3), rec("b", Criterion::Coverage, 3)];
        let s = aggregate_survey(&records, Deviation::Population).unwrap();
        assert_eq!(s.get(Criterion::Coverage).std_dev, Some(0.0));
    }

    #[test]
    fn out_of_range() {
        assert!(LikertRecord::new("a", Criterion::Coverage, 6).is_err());
        assert!(LikertRecord::new("a", Criterion::Coverage, 0).is_err());
        let forged = LikertRecord { scenario_id: "a".into(), criterion: Criterion::Coverage, rating: 6, excluded: false };
        assert!(aggregate_survey(&[forged], Deviation::Population).is_err());
    }

    #[test]
    fn exclusion_drops_whole_scenario() {
        let records = vec![
            rec("gated", Criterion::Relevance, 1).excluded(true),
            rec("gated", Criterion::Coverage, 1),
            rec("ok", Criterion::Coverage, 5),
        ];
        let s = aggregate_survey(&records, Deviation::Population).unwrap();
        assert_eq!(s.get(Criterion::Coverage).mean, Some(5.0));
        assert_eq!(s.get(Criterion::Relevance).count, 0);
        assert_eq!(s.excluded_scenarios, vec!["gated"]);
        assert!(aggregate_survey(&records[..2], Deviation::Population).is_err());
    }

    #[test]
    fn sample_deviation() {
        let records = vec![rec("a", Criterion::Feasibility, 2), rec("b", Criterion::Feasibility, 4)];
        let s = aggregate_survey(&records, Deviation::Sample).unwrap();
        assert!((s.get(Criterion::Feasibility).std_dev.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn alias() {
        assert_eq!("Understandability".parse::<Criterion>(), Ok(Criterion::Coherence));
        assert!("style".parse::<Criterion>().is_err());
    }

    #[test]
    fn ratings_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "scenario_id,criterion,rating,excluded\nA,relevance,4,\nA,understandability,5,false\nB,coverage,1,true\n").unwrap();
        let records = load_ratings(&path).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[1].criterion, Criterion::Coherence);
        assert!(records[2].excluded);

        std::fs::write(&path, "scenario_id,criterion,rating,excluded\nA,relevance,6,\n").unwrap();
        let err = load_ratings(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        std::fs::write(&path, "scenario_id,criterion,rating,excluded\nA,relevance,4.5,\n").unwrap();
        assert!(load_ratings(&path).is_err());
    }

    proptest! {
        #[test]
        fn duplicating_records_keeps_mean_and_spread(ratings in prop::collection::vec((0usize..5, 1u8..=5), 1..40)) {
            let records: Vec<_> = ratings
                .iter()
                .enumerate()
                .map(|(i, &(c, r))| rec(&format!("s{i}"), Criterion::ALL[c], r))
                .collect();
            let doubled: Vec<_> = records.iter().chain(&records).cloned().collect();
            let a = aggregate_survey(&records, Deviation::Population).unwrap();
            let b = aggregate_survey(&doubled, Deviation::Population).unwrap();
            for (x, y) in a.criteria.iter().zip(&b.criteria) {
                prop_assert_eq!(x.count * 2, y.count);
                match (x.mean, y.mean) {
                    (Some(m1), Some(m2)) => prop_assert!((m1 - m2).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
                match (x.std_dev, y.std_dev) {
                    (Some(s1), Some(s2)) => prop_assert!((s1 - s2).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
                prop_assert!(x.std_dev.unwrap_or(0.0) >= 0.0);
                prop_assert_eq!(x.histogram.iter().sum::<usize>(), x.count);
            }
        }
    }
}
