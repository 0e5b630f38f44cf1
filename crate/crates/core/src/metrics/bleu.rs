use std::collections::HashMap;

use super::Score;

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped matches and candidate n-gram total for one order.
pub(crate) fn clipped_overlap(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

/// Sufficient statistics for one or more candidate/reference pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct BleuStats {
    pub matched: Vec<usize>,
    pub totals: Vec<usize>,
    pub cand_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn of(candidate: &[String], reference: &[String], max_n: usize) -> Self {
        let (matched, totals) = (1..=max_n).map(|n| clipped_overlap(candidate, reference, n)).unzip();
        Self {
            matched,
            totals,
            cand_len: candidate.len(),
            ref_len: reference.len(),
        }
    }

    pub fn add(&mut self, other: &BleuStats) {
        if self.matched.len() < other.matched.len() {
            self.matched.resize(other.matched.len(), 0);
            self.totals.resize(other.totals.len(), 0);
        }
        for (i, (&m, &t)) in other.matched.iter().zip(&other.totals).enumerate() {
            self.matched[i] += m;
            self.totals[i] += t;
        }
        self.cand_len += other.cand_len;
        self.ref_len += other.ref_len;
    }

    /// Orders with no candidate n-gram at all are left out, which caps N at
    /// the candidate length.
    pub fn score(&self, smoothing: Option<f64>) -> Score {
        if self.cand_len == 0 || self.ref_len == 0 {
            return Score::degenerate();
        }
        let mut log_sum = 0.0;
        let mut orders = 0usize;
        for (&m, &t) in self.matched.iter().zip(&self.totals) {
            if t == 0 {
                continue;
            }
            let p = match (m, smoothing) {
                (0, Some(eps)) => eps / t as f64,
                (0, None) => return Score::new(0.0),
                _ => m as f64 / t as f64,
            };
            log_sum += p.ln();
            orders += 1;
        }
        let geomean = (log_sum / orders as f64).exp();
        let (c, r) = (self.cand_len as f64, self.ref_len as f64);
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        Score::new(bp * geomean)
    }
}
