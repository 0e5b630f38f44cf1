use super::bleu::clipped_overlap;

/// ROUGE-N recall: clipped n-gram overlap over the reference n-gram count.
pub(crate) fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> f64 {
    let ref_total = reference.len().saturating_sub(n - 1);
    if ref_total == 0 {
        return 0.0;
    }
    let (matched, _) = clipped_overlap(candidate, reference, n);
    matched as f64 / ref_total as f64
}

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L as the F1 of LCS-based precision and recall.
pub(crate) fn rouge_l(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate, reference) as f64;
    let (p, r) = (lcs / candidate.len() as f64, lcs / reference.len() as f64);
    if p + r == 0.0 {
        0.0
    } else {
        (2.0 * p * r / (p + r)).min(1.0)
    }
}
