//! Unigram alignment with exact and stem matches.
//!
//! The number of matches is fixed by token counts alone: every token type
//! contributes `min(cand_count, ref_count)` exact matches, and the leftovers
//! of each stem class pair up the same way. Only the positions are open, so
//! the alignment search just minimizes chunks, which is the same as
//! maximizing adjacent pairs `(i, j), (i + 1, j + 1)`. Two greedy
//! alignments seed a depth-first branch and bound, which stops after a node
//! limit and keeps the best alignment seen. Short sentences are solved
//! exactly; long texts usually hit the limit.

use std::collections::BTreeMap;

use log::debug;

use super::{MeteorParams, Score};

const SUFFIXES: [&str; 6] = ["ing", "es", "ed", "en", "s", "n"];
const MIN_STEM_CHARS: usize = 3;

/// Strips the longest listed suffix that leaves at least three characters.
pub fn stem(token: &str) -> &str {
    let chars = token.chars().count();
    for suffix in SUFFIXES {
        if let Some(base) = token.strip_suffix(suffix) {
            if chars - suffix.chars().count() >= MIN_STEM_CHARS {
                return base;
            }
        }
    }
    token
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Exact,
    Stem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    /// `(candidate index, reference index)`, sorted by candidate index.
    pub pairs: Vec<(usize, usize)>,
    pub chunks: usize,
    /// `false` when the node limit cut the search short.
    pub optimal: bool,
}

pub fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

struct Problem {
    cand_type: Vec<usize>,
    ref_type: Vec<usize>,
    class_of: Vec<usize>,
    /// Allowed partners per candidate position, by ascending reference index.
    options: Vec<Vec<(usize, Kind)>>,
    /// `pot_suffix[i]` bounds the adjacencies ending at positions `k >= i`.
    pot_suffix: Vec<usize>,
    exact_quota: Vec<usize>,
    stem_quota: Vec<usize>,
    total: usize,
}

impl Problem {
    fn new(candidate: &[String], reference: &[String]) -> Self {
        let mut type_ids: BTreeMap<&str, usize> = BTreeMap::new();
        for t in candidate.iter().chain(reference) {
            let next = type_ids.len();
            type_ids.entry(t.as_str()).or_insert(next);
        }
        let mut class_ids: BTreeMap<&str, usize> = BTreeMap::new();
        let mut class_of = vec![0; type_ids.len()];
        for (&t, &id) in &type_ids {
            let next = class_ids.len();
            class_of[id] = *class_ids.entry(stem(t)).or_insert(next);
        }
        let cand_type: Vec<usize> = candidate.iter().map(|t| type_ids[t.as_str()]).collect();
        let ref_type: Vec<usize> = reference.iter().map(|t| type_ids[t.as_str()]).collect();

        let n_types = type_ids.len();
        let (mut cc, mut rc) = (vec![0usize; n_types], vec![0usize; n_types]);
        cand_type.iter().for_each(|&t| cc[t] += 1);
        ref_type.iter().for_each(|&t| rc[t] += 1);
        let exact_quota: Vec<usize> = (0..n_types).map(|t| cc[t].min(rc[t])).collect();
        let (mut cl, mut rl) = (vec![0usize; class_ids.len()], vec![0usize; class_ids.len()]);
        for t in 0..n_types {
            cl[class_of[t]] += cc[t] - exact_quota[t];
            rl[class_of[t]] += rc[t] - exact_quota[t];
        }
        let stem_quota: Vec<usize> = cl.iter().zip(&rl).map(|(a, b)| *a.min(b)).collect();
        let total = exact_quota.iter().sum::<usize>() + stem_quota.iter().sum::<usize>();

        let allowed = |i: usize, j: usize| -> Option<Kind> {
            let (a, b) = (cand_type[i], ref_type[j]);
            if a == b {
                Some(Kind::Exact)
            } else if class_of[a] == class_of[b] {
                Some(Kind::Stem)
            } else {
                None
            }
        };
        let options: Vec<Vec<(usize, Kind)>> = (0..cand_type.len())
            .map(|i| (0..ref_type.len()).filter_map(|j| allowed(i, j).map(|k| (j, k))).collect())
            .collect();
        let pot_suffix = diagonal_bound(cand_type.len(), ref_type.len(), |i, j| allowed(i, j).is_some());

        Self {
            cand_type,
            ref_type,
            class_of,
            options,
            pot_suffix,
            exact_quota,
            stem_quota,
            total,
        }
    }

    /// Exact matches are placed first, then stem matches for the leftovers.
    /// With `longest_runs` the exact stage repeatedly takes the longest
    /// diagonal run of unused exact pairs; otherwise it walks left to right
    /// and continues the current diagonal when it can. Both are feasible.
    fn greedy(&self, longest_runs: bool) -> Vec<(usize, usize)> {
        let (n, m) = (self.cand_type.len(), self.ref_type.len());
        let mut used = vec![false; m];
        let mut chosen: Vec<Option<usize>> = vec![None; n];
        if longest_runs {
            self.take_longest_runs(&mut chosen, &mut used);
        }
        let mut rem_stem = self.stem_quota.clone();
        for kind in [Kind::Exact, Kind::Stem] {
            for i in 0..n {
                if chosen[i].is_some() {
                    continue;
                }
                let class = self.class_of[self.cand_type[i]];
                if kind == Kind::Stem && rem_stem[class] == 0 {
                    continue;
                }
                let free = |&&(j, k): &&(usize, Kind)| k == kind && !used[j];
                let before = i.checked_sub(1).and_then(|p| chosen[p]).map(|j| j + 1);
                let after = chosen.get(i + 1).copied().flatten().and_then(|j| j.checked_sub(1));
                let pick = [before, after]
                    .into_iter()
                    .flatten()
                    .find_map(|want| self.options[i].iter().filter(free).find(|(j, _)| *j == want))
                    .or_else(|| self.options[i].iter().find(free))
                    .map(|(j, _)| *j);
                if let Some(j) = pick {
                    used[j] = true;
                    chosen[i] = Some(j);
                    if kind == Kind::Stem {
                        rem_stem[class] -= 1;
                    }
                }
            }
        }
        chosen
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect()
    }

    fn take_longest_runs(&self, chosen: &mut [Option<usize>], used: &mut [bool]) {
        let (n, m) = (self.cand_type.len(), self.ref_type.len());
        let mut run = vec![0usize; (n + 1) * (m + 1)];
        loop {
            let mut best = (0usize, 0usize, 0usize);
            for i in (0..n).rev() {
                for j in (0..m).rev() {
                    let here = if chosen[i].is_none() && !used[j] && self.cand_type[i] == self.ref_type[j] {
                        1 + run[(i + 1) * (m + 1) + j + 1]
                    } else {
                        0
                    };
                    run[i * (m + 1) + j] = here;
                    if here >= best.0 && here > 0 {
                        best = (here, i, j);
                    }
                }
            }
            let (len, i, j) = best;
            if len == 0 {
                return;
            }
            for d in 0..len {
                chosen[i + d] = Some(j + d);
                used[j + d] = true;
            }
        }
    }
}

/// For every start `i`, the maximum number of disjoint diagonal steps
/// `(k - 1, j - 1) -> (k, j)` with `k >= i`. Two adjacencies never share a
/// candidate step or a reference step, so a bipartite matching between the
/// two step sets bounds them. Steps are added from the right with Kuhn's
/// augmenting paths, which keeps each suffix matching maximum.
fn diagonal_bound(n: usize, m: usize, allowed: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut bound = vec![0usize; n + 1];
    if n < 2 || m < 2 {
        return bound;
    }
    let edges: Vec<Vec<usize>> = (1..n)
        .map(|k| (1..m).filter(|&j| allowed(k, j) && allowed(k - 1, j - 1)).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut size = 0;
    for k in (1..n).rev() {
        let mut seen = vec![false; m];
        if augment(k - 1, &edges, &mut owner, &mut seen) {
            size += 1;
        }
        bound[k] = size;
    }
    bound[0] = size;
    bound
}

fn augment(left: usize, edges: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &edges[left] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match owner[j] {
            None => true,
            Some(other) => augment(other, edges, owner, seen),
        };
        if free {
            owner[j] = Some(left);
            return true;
        }
    }
    false
}

struct Search<'p> {
    p: &'p Problem,
    node_limit: usize,
    nodes: usize,
    used: Vec<bool>,
    cand_left: Vec<usize>,
    ref_free: Vec<usize>,
    rem_exact: Vec<usize>,
    rem_stem: Vec<usize>,
    cand_slack: Vec<usize>,
    remaining: usize,
    current: Vec<(usize, usize)>,
    best_adj: usize,
    best: Vec<(usize, usize)>,
    ceiling: usize,
    aborted: bool,
}

impl<'p> Search<'p> {
    fn new(p: &'p Problem, node_limit: usize, incumbent: Vec<(usize, usize)>) -> Self {
        let n_types = p.exact_quota.len();
        let n_classes = p.stem_quota.len();
        let (mut cand_left, mut ref_free) = (vec![0usize; n_types], vec![0usize; n_types]);
        p.cand_type.iter().for_each(|&t| cand_left[t] += 1);
        p.ref_type.iter().for_each(|&t| ref_free[t] += 1);
        let mut cand_slack = vec![0usize; n_classes];
        for t in 0..n_types {
            cand_slack[p.class_of[t]] += cand_left[t] - p.exact_quota[t];
        }
        let best_adj = incumbent.len() - count_chunks(&incumbent).min(incumbent.len());
        Self {
            p,
            node_limit,
            nodes: 0,
            used: vec![false; p.ref_type.len()],
            cand_left,
            ref_free,
            rem_exact: p.exact_quota.clone(),
            rem_stem: p.stem_quota.clone(),
            cand_slack,
            remaining: p.total,
            current: Vec::with_capacity(p.total),
            best_adj,
            best: incumbent,
            ceiling: p.total.saturating_sub(1).min(p.pot_suffix.first().copied().unwrap_or(0)),
            aborted: false,
        }
    }

    fn done(&self) -> bool {
        self.aborted || self.best_adj >= self.ceiling
    }

    fn run(&mut self, i: usize, prev: Option<usize>, adj: usize) {
        if self.done() {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_limit {
            self.aborted = true;
            return;
        }
        let p = self.p;
        if i == p.cand_type.len() {
            if self.remaining == 0 && adj > self.best_adj {
                self.best_adj = adj;
                self.best = self.current.clone();
            }
            return;
        }
        if adj + p.pot_suffix[i].min(self.remaining) <= self.best_adj {
            return;
        }
        let t = p.cand_type[i];
        let class = p.class_of[t];

        let diagonal = prev.map(|j| j + 1);
        let opts = &p.options[i];
        let ordered = opts
            .iter()
            .filter(|(j, _)| Some(*j) == diagonal)
            .chain(opts.iter().filter(|(j, _)| Some(*j) != diagonal));
        for &(j, kind) in ordered {
            if self.used[j] {
                continue;
            }
            let u = p.ref_type[j];
            let feasible = match kind {
                Kind::Exact => self.rem_exact[t] > 0,
                Kind::Stem => {
                    self.rem_stem[class] > 0
                        && self.cand_left[t] > self.rem_exact[t]
                        && self.ref_free[u] > self.rem_exact[u]
                }
            };
            if !feasible {
                continue;
            }
            self.apply(i, j, kind, true);
            let gain = usize::from(Some(j) == diagonal);
            self.run(i + 1, Some(j), adj + gain);
            self.apply(i, j, kind, false);
            if self.done() {
                return;
            }
        }

        // leave position i unmatched
        if self.cand_left[t] > self.rem_exact[t] && self.cand_slack[class] > self.rem_stem[class] {
            self.cand_left[t] -= 1;
            self.cand_slack[class] -= 1;
            self.run(i + 1, None, adj);
            self.cand_left[t] += 1;
            self.cand_slack[class] += 1;
        }
    }

    fn apply(&mut self, i: usize, j: usize, kind: Kind, forward: bool) {
        let p = self.p;
        let (t, u) = (p.cand_type[i], p.ref_type[j]);
        let class = p.class_of[t];
        if forward {
            self.used[j] = true;
            self.cand_left[t] -= 1;
            self.ref_free[u] -= 1;
            self.remaining -= 1;
            match kind {
                Kind::Exact => self.rem_exact[t] -= 1,
                Kind::Stem => {
                    self.rem_stem[class] -= 1;
                    self.cand_slack[class] -= 1;
                }
            }
            self.current.push((i, j));
        } else {
            self.current.pop();
            match kind {
                Kind::Exact => self.rem_exact[t] += 1,
                Kind::Stem => {
                    self.rem_stem[class] += 1;
                    self.cand_slack[class] += 1;
                }
            }
            self.remaining += 1;
            self.ref_free[u] += 1;
            self.cand_left[t] += 1;
            self.used[j] = false;
        }
    }
}

/// Finds a maximum alignment (exact matches first) with as few chunks as
/// the node budget allows.
pub fn align(candidate: &[String], reference: &[String], node_limit: usize) -> Alignment {
    let problem = Problem::new(candidate, reference);
    let incumbent = [problem.greedy(true), problem.greedy(false)]
        .into_iter()
        .min_by_key(|pairs| count_chunks(pairs))
        .expect("two seeds");
    debug_assert_eq!(incumbent.len(), problem.total);
    log::trace!("adjacency bound {}", problem.pot_suffix[0]);
    let mut search = Search::new(&problem, node_limit, incumbent);
    if !search.done() {
        search.run(0, None, 0);
    }
    if search.aborted {
        debug!(
            "alignment search stopped after {} nodes; keeping {} adjacencies",
            node_limit, search.best_adj
        );
    }
    let pairs = search.best;
    Alignment {
        chunks: count_chunks(&pairs),
        optimal: !search.aborted,
        pairs,
    }
}

pub(crate) fn meteor(candidate: &[String], reference: &[String], params: &MeteorParams) -> Score {
    if candidate.is_empty() || reference.is_empty() {
        return Score::degenerate();
    }
    let alignment = align(candidate, reference, params.node_limit);
    let m = alignment.pairs.len();
    if m == 0 {
        return Score::new(0.0);
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let penalty = params.gamma * (alignment.chunks as f64 / m as f64).powf(params.beta);
    Score::new(f_mean * (1.0 - penalty))
}
