//! A deliberately naive scorer used as an oracle for the library metrics.
//! Every quantity is computed by direct enumeration.

pub const ALPHA: f64 = 0.9;
pub const BETA: f64 = 3.0;
pub const GAMMA: f64 = 0.5;

pub fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in lower.chars() {
        if ch.is_alphanumeric() {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

fn grams(toks: &[String], n: usize) -> Vec<&[String]> {
    if toks.len() < n {
        return Vec::new();
    }
    (0..=toks.len() - n).map(|i| &toks[i..i + n]).collect()
}

fn occurrences(list: &[&[String]], g: &[String]) -> usize {
    list.iter().filter(|x| **x == g).count()
}

pub fn bleu(c: &[String], r: &[String]) -> f64 {
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let n_max = 4.min(c.len());
    let mut product = 1.0;
    for n in 1..=n_max {
        let cg = grams(c, n);
        let rg = grams(r, n);
        let mut seen: Vec<&[String]> = Vec::new();
        let mut clipped = 0usize;
        for g in &cg {
            if seen.contains(g) {
                continue;
            }
            seen.push(g);
            clipped += occurrences(&cg, g).min(occurrences(&rg, g));
        }
        if clipped == 0 {
            return 0.0;
        }
        product *= clipped as f64 / cg.len() as f64;
    }
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    bp * product.powf(1.0 / n_max as f64)
}

pub fn rouge_n(c: &[String], r: &[String], n: usize) -> f64 {
    let cg = grams(c, n);
    let rg = grams(r, n);
    if rg.is_empty() {
        return 0.0;
    }
    let mut seen: Vec<&[String]> = Vec::new();
    let mut hit = 0usize;
    for g in &rg {
        if seen.contains(g) {
            continue;
        }
        seen.push(g);
        hit += occurrences(&rg, g).min(occurrences(&cg, g));
    }
    hit as f64 / rg.len() as f64
}

fn is_subsequence(sub: &[&String], of: &[String]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|s| it.any(|t| t == *s))
}

/// Longest common subsequence by trying every subset of the candidate.
pub fn lcs(c: &[String], r: &[String]) -> usize {
    assert!(c.len() <= 20, "oracle LCS is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << c.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let sub: Vec<&String> = (0..c.len()).filter(|i| mask >> i & 1 == 1).map(|i| &c[i]).collect();
        if is_subsequence(&sub, r) {
            best = size;
        }
    }
    best
}

pub fn rouge_l(c: &[String], r: &[String]) -> f64 {
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let l = lcs(c, r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
    2.0 * p * rec / (p + rec)
}

pub fn stem(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut best: Option<usize> = None;
    for suffix in ["s", "es", "ed", "ing", "en", "n"] {
        let k = suffix.chars().count();
        if word.ends_with(suffix) && chars.len() >= k + 3 && best.is_none_or(|b| k > b) {
            best = Some(k);
        }
    }
    match best {
        Some(k) => chars[..chars.len() - k].iter().collect(),
        None => word.to_owned(),
    }
}

fn chunks(pairs: &[(usize, usize)]) -> usize {
    let mut sorted = pairs.to_vec();
    sorted.sort();
    let mut count = 0;
    for (idx, p) in sorted.iter().enumerate() {
        let continues = idx > 0 && sorted[idx - 1].0 + 1 == p.0 && sorted[idx - 1].1 + 1 == p.1;
        if !continues {
            count += 1;
        }
    }
    count
}

struct Best {
    exact: usize,
    total: usize,
    chunks: usize,
}

fn search(c: &[String], r: &[String], i: usize, used: &mut Vec<bool>, pairs: &mut Vec<(usize, usize)>, exact: usize, best: &mut Best) {
    if i == c.len() {
        let total = pairs.len();
        let ch = chunks(pairs);
        let better = (exact, total) > (best.exact, best.total)
            || ((exact, total) == (best.exact, best.total) && ch < best.chunks);
        if better {
            *best = Best { exact, total, chunks: ch };
        }
        return;
    }
    search(c, r, i + 1, used, pairs, exact, best);
    for j in 0..r.len() {
        if used[j] {
            continue;
        }
        let is_exact = c[i] == r[j];
        if !is_exact && stem(&c[i]) != stem(&r[j]) {
            continue;
        }
        used[j] = true;
        pairs.push((i, j));
        search(c, r, i + 1, used, pairs, exact + usize::from(is_exact), best);
        pairs.pop();
        used[j] = false;
    }
}

/// (matches, chunks) of the preferred alignment: most exact matches, then
/// most matches overall, then fewest chunks.
pub fn meteor_alignment(c: &[String], r: &[String]) -> (usize, usize) {
    let mut best = Best { exact: 0, total: 0, chunks: usize::MAX };
    search(c, r, 0, &mut vec![false; r.len()], &mut Vec::new(), 0, &mut best);
    (best.total, if best.total == 0 { 0 } else { best.chunks })
}

pub fn meteor(c: &[String], r: &[String]) -> f64 {
    if c.is_empty() || r.is_empty() {
        return 0.0;
    }
    let (m, ch) = meteor_alignment(c, r);
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / c.len() as f64;
    let rec = m as f64 / r.len() as f64;
    let f = p * rec / (ALPHA * p + (1.0 - ALPHA) * rec);
    f * (1.0 - GAMMA * (ch as f64 / m as f64).powf(BETA))
}
