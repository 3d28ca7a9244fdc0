//! Spike-triggered prediction from stored counts.
//!
//! On receipt of a spike at `t` every tree predicts its channel for the next
//! `M'` steps. Step `n` uses the window `W_{t+n}` built from events known at
//! `t`, so known events recede to larger delays as `n` grows. Each matching
//! node is a candidate; the one with the lowest entropy represents the cell.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::event::{window_from_events, Channel, Delay, Event, EventStream, Subsequence, Time};
use crate::tree::{EpstTree, NodeId, NodeKind, MAX_WINDOW_ENTRIES, ROOT};

/// `min(numerator / denominator, 1)`.
pub fn estimate_probability(numerator: u64, denominator: u64) -> Result<f64> {
    if denominator == 0 {
        return Err(Error::UndefinedCandidate);
    }
    Ok((numerator as f64 / denominator as f64).min(1.0))
}

/// Binary Shannon entropy in nats with `0 ln 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    (-(term(p) + term(1.0 - p))).max(0.0)
}

pub fn entropy(numerator: u64, denominator: u64) -> Result<f64> {
    estimate_probability(numerator, denominator).map(binary_entropy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub subsequence: Subsequence,
    pub numerator: u64,
    pub denominator: u64,
    pub probability: f64,
    pub entropy: f64,
    pub inhibitory: bool,
}

impl Candidate {
    pub fn excitatory(subsequence: Subsequence, numerator: u64, denominator: u64) -> Result<Self> {
        let probability = estimate_probability(numerator, denominator)?;
        Ok(Self {
            subsequence,
            numerator,
            denominator,
            probability,
            entropy: binary_entropy(probability),
            inhibitory: false,
        })
    }

    /// Inhibitory patterns force a zero estimate, which has zero entropy.
    pub fn inhibitory(subsequence: Subsequence, joint: u64, false_negatives: u64) -> Self {
        Self {
            subsequence,
            numerator: joint,
            denominator: false_negatives,
            probability: 0.0,
            entropy: 0.0,
            inhibitory: true,
        }
    }

    fn from_node(tree: &EpstTree, id: NodeId) -> Option<Self> {
        let info = tree.info(id);
        match info.kind {
            NodeKind::Excitatory => Self::excitatory(tree.path(id), info.numerator, info.denominator).ok(),
            NodeKind::Inhibitory { joint, false_negatives } => {
                Some(Self::inhibitory(tree.path(id), joint, false_negatives))
            }
            NodeKind::Structural => None,
        }
    }
}

/// Preference order: lower entropy, then longer subsequence, then higher
/// denominator, then canonical subsequence order.
pub fn preference(a: &Candidate, b: &Candidate) -> Ordering {
    a.entropy
        .total_cmp(&b.entropy)
        .then_with(|| b.subsequence.len().cmp(&a.subsequence.len()))
        .then_with(|| b.denominator.cmp(&a.denominator))
        .then_with(|| a.subsequence.canonical_cmp(&b.subsequence))
}

pub fn select_representative(candidates: &[Candidate]) -> Option<&Candidate> {
    candidates.iter().min_by(|a, b| preference(a, b))
}

/// Returns the first candidate whose entropy is at most `threshold`, falling
/// back to the full-scan choice when none qualifies.
pub fn early_stop_select<'a, I>(candidates: I, threshold: f64) -> Option<&'a Candidate>
where
    I: IntoIterator<Item = &'a Candidate>,
{
    let mut best: Option<&Candidate> = None;
    for c in candidates {
        if c.entropy <= threshold {
            return Some(c);
        }
        if best.is_none_or(|b| preference(c, b) == Ordering::Less) {
            best = Some(c);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PredictOptions {
    /// Entropy level at which candidate scanning stops early.
    pub early_stop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub channel: Channel,
    pub probabilities: Vec<f64>,
    /// The representative behind every nonzero cell.
    pub chosen: Vec<Option<Candidate>>,
}

/// Probability estimates for `g_{t+n}` per tree channel and `n in 0..=M'`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub trigger_time: Time,
    pub prediction_window: Delay,
    pub rows: Vec<PredictionRow>,
}

impl PredictionMatrix {
    pub fn zeros(channels: impl IntoIterator<Item = Channel>, trigger_time: Time, prediction_window: Delay) -> Self {
        let width = prediction_window as usize + 1;
        Self {
            trigger_time,
            prediction_window,
            rows: channels
                .into_iter()
                .map(|channel| PredictionRow {
                    channel,
                    probabilities: vec![0.0; width],
                    chosen: vec![None; width],
                })
                .collect(),
        }
    }

    pub fn row(&self, channel: Channel) -> Option<&PredictionRow> {
        self.rows.iter().find(|r| r.channel == channel)
    }

    /// Zero for channels without a tree and for `n` beyond the window.
    pub fn get(&self, channel: Channel, n: usize) -> f64 {
        self.row(channel)
            .and_then(|r| r.probabilities.get(n).copied())
            .unwrap_or(0.0)
    }

    /// Nonzero cells as `(channel, n, probability)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (Channel, usize, f64)> + '_ {
        self.rows.iter().flat_map(|r| {
            r.probabilities
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(move |(n, p)| (r.channel, n, *p))
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,n,probability\n");
        for r in &self.rows {
            for (n, p) in r.probabilities.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", r.channel, n, p));
            }
        }
        out
    }

    fn merge_max(&mut self, other: PredictionMatrix) {
        for (mine, theirs) in self.rows.iter_mut().zip(other.rows) {
            for (n, (p, c)) in theirs.probabilities.into_iter().zip(theirs.chosen).enumerate() {
                if p > mine.probabilities[n] {
                    mine.probabilities[n] = p;
                    mine.chosen[n] = c;
                }
            }
        }
    }
}

/// Observed events that can appear in some `W_{t+n}` known at `t`.
pub fn known_events(stream: &EventStream, t: Time, history_window: Delay) -> Vec<Event> {
    known_from_events(stream.events(), t, history_window)
}

pub(crate) fn known_from_events(events: &[Event], t: Time, history_window: Delay) -> Vec<Event> {
    let lo = t.saturating_sub(history_window as Time);
    let start = events.partition_point(|e| e.time < lo);
    let end = events.partition_point(|e| e.time <= t);
    events[start..end].iter().filter(|e| e.is_observed()).copied().collect()
}

pub fn predict_window(trees: &[EpstTree], stream: &EventStream, t: Time) -> PredictionMatrix {
    predict_with(trees, stream.events(), t, PredictOptions::default())
}

/// Prediction over a time-sorted event slice; events after `t` are ignored.
pub fn predict_with(trees: &[EpstTree], events: &[Event], t: Time, options: PredictOptions) -> PredictionMatrix {
    let width = trees.first().map_or(0, |tr| tr.params().prediction_window);
    let mut m = PredictionMatrix::zeros(trees.iter().map(|tr| tr.preferred()), t, width);
    for (row, tree) in m.rows.iter_mut().zip(trees) {
        let known = known_from_events(events, t, tree.params().history_window);
        predict_tree(tree, &known, t, options, row);
    }
    m
}

/// One depth-first pass over the tree for all steps at once. The state of a
/// partial match carries the set of steps `n` at which every assignment so
/// far is valid, as a bitmask.
fn predict_tree(tree: &EpstTree, known: &[Event], t: Time, options: PredictOptions, row: &mut PredictionRow) {
    let p = tree.params();
    let (m, mp, tol) = (
        p.history_window as i64,
        p.prediction_window as i64,
        p.matching_interval as i64,
    );
    // most recent entries first, mirroring the window cap used when learning
    let entries: Vec<(i64, Channel)> = known
        .iter()
        .rev()
        .take(MAX_WINDOW_ENTRIES)
        .map(|e| ((t - e.time) as i64, e.channel))
        .collect();
    let interval = |lo: i64, hi: i64| -> u128 {
        let (lo, hi) = (lo.max(0), hi.min(mp));
        if lo > hi {
            return 0;
        }
        let upto = if hi >= 127 { u128::MAX } else { (1u128 << (hi + 1)) - 1 };
        upto & !((1u128 << lo) - 1)
    };
    let all = interval(0, mp);

    let nodes = &tree.nodes;
    let mut matched: Vec<(NodeId, u128)> = Vec::new();
    let mut stack: Vec<(NodeId, u128, u128)> = vec![(ROOT, 0, all)];
    while let Some((id, used, steps)) = stack.pop() {
        let node = &nodes[id as usize];
        let cum = node.cum_delay as i64;
        for (k, &(base, ch)) in entries.iter().enumerate() {
            if used & (1u128 << k) != 0 {
                continue;
            }
            // delay of entry k at step n is base + n, valid in 1..=M
            let valid = interval(1 - base, m - base);
            let reach = steps & valid;
            if reach == 0 {
                continue;
            }
            let lo_n = reach.trailing_zeros() as i64;
            let hi_n = 127 - reach.leading_zeros() as i64;
            let lo = (base + lo_n - tol - cum).max(0);
            let hi = base + hi_n + tol - cum;
            if hi < 0 {
                continue;
            }
            for &(_, child) in node.children_in(ch, lo as Delay, hi as Delay) {
                let d = nodes[child as usize].cum_delay as i64;
                let s = reach & interval(d - tol - base, d + tol - base);
                if s != 0 {
                    matched.push((child, s));
                    stack.push((child, used | (1u128 << k), s));
                }
            }
        }
    }
    matched.sort_unstable_by_key(|m| m.0);
    let mut merged: Vec<(NodeId, u128)> = Vec::with_capacity(matched.len());
    for (id, s) in matched {
        match merged.last_mut() {
            Some((last, acc)) if *last == id => *acc |= s,
            _ => merged.push((id, s)),
        }
    }

    let mut cands: Vec<(Candidate, u128)> = merged
        .into_iter()
        .filter(|&(id, _)| tree.usable(id))
        .filter_map(|(id, s)| Candidate::from_node(tree, id).map(|c| (c, s)))
        .collect();
    if cands.is_empty() {
        return;
    }
    match options.early_stop {
        None => {
            cands.sort_by(|a, b| preference(&a.0, &b.0));
            for n in 0..=mp as usize {
                if let Some((c, _)) = cands.iter().find(|(_, s)| s & (1u128 << n) != 0) {
                    row.probabilities[n] = c.probability;
                    if c.probability > 0.0 {
                        row.chosen[n] = Some(c.clone());
                    }
                }
            }
        }
        Some(threshold) => {
            cands.sort_by(|a, b| a.0.subsequence.canonical_cmp(&b.0.subsequence));
            for n in 0..=mp as usize {
                let here = cands.iter().filter(|(_, s)| s & (1u128 << n) != 0).map(|(c, _)| c);
                if let Some(c) = early_stop_select(here, threshold) {
                    row.probabilities[n] = c.probability;
                    if c.probability > 0.0 {
                        row.chosen[n] = Some(c.clone());
                    }
                }
            }
        }
    }
}

/// Reference implementation: builds every `W_{t+n}` explicitly and scores
/// the nodes returned by [`EpstTree::matching_nodes`].
pub fn predict_window_naive(trees: &[EpstTree], stream: &EventStream, t: Time) -> PredictionMatrix {
    let width = trees.first().map_or(0, |tr| tr.params().prediction_window);
    let mut m = PredictionMatrix::zeros(trees.iter().map(|tr| tr.preferred()), t, width);
    for (row, tree) in m.rows.iter_mut().zip(trees) {
        let known = known_events(stream, t, tree.params().history_window);
        for n in 0..=width as usize {
            let w = window_from_events(&known, t + n as Time, tree.params().history_window);
            let cands: Vec<Candidate> = tree
                .matching_nodes(&w)
                .into_iter()
                .filter_map(|mn| Candidate::from_node(tree, mn.id))
                .collect();
            if let Some(c) = select_representative(&cands) {
                row.probabilities[n] = c.probability;
                if c.probability > 0.0 {
                    row.chosen[n] = Some(c.clone());
                }
            }
        }
    }
    m
}

/// Runs the prediction `repeats` times on random subsets of at most
/// `sample_size` known events and keeps the cell-wise maximum.
pub fn sampled_predict(
    trees: &[EpstTree],
    stream: &EventStream,
    t: Time,
    sample_size: usize,
    repeats: usize,
    seed: u64,
) -> PredictionMatrix {
    sampled_predict_with(trees, stream.events(), t, sample_size, repeats, seed)
}

/// [`sampled_predict`] over a time-sorted event slice.
pub fn sampled_predict_with(
    trees: &[EpstTree],
    events: &[Event],
    t: Time,
    sample_size: usize,
    repeats: usize,
    seed: u64,
) -> PredictionMatrix {
    let width = trees.first().map_or(0, |tr| tr.params().prediction_window);
    let history = trees.iter().map(|tr| tr.params().history_window).max().unwrap_or(0);
    let known = known_from_events(events, t, history);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PredictionMatrix::zeros(trees.iter().map(|tr| tr.preferred()), t, width);
    for _ in 0..repeats.max(1) {
        let k = sample_size.min(known.len());
        let mut picked = sample(&mut rng, known.len(), k).into_vec();
        picked.sort_unstable();
        let subset: Vec<Event> = picked.into_iter().map(|i| known[i]).collect();
        out.merge_max(predict_with(trees, &subset, t, PredictOptions::default()));
    }
    out
}
