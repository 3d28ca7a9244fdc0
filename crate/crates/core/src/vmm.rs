//! Variable-order Markov baselines over the symbolized stream: PPM-C with
//! escape method C (no exclusion) and a prediction suffix tree that answers
//! from its longest sufficiently frequent context.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::event::{Channel, EventStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VmmKind {
    Ppmc,
    Pst,
}

impl VmmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VmmKind::Ppmc => "ppmc",
            VmmKind::Pst => "pst",
        }
    }
}

impl fmt::Display for VmmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VmmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ppmc" => Ok(VmmKind::Ppmc),
            "pst" => Ok(VmmKind::Pst),
            other => Err(Error::UnknownAlgorithm(other.to_string())),
        }
    }
}

/// Channels in event order, simultaneous events by ascending channel, with
/// dropped events left out.
pub fn symbolize(stream: &EventStream) -> Vec<Channel> {
    stream.observed().map(|e| e.channel).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ContextStats {
    total: u64,
    /// Sorted by symbol.
    counts: Vec<(Channel, u64)>,
}

impl ContextStats {
    fn add(&mut self, symbol: Channel) {
        self.total += 1;
        match self.counts.binary_search_by_key(&symbol, |c| c.0) {
            Ok(i) => self.counts[i].1 += 1,
            Err(i) => self.counts.insert(i, (symbol, 1)),
        }
    }

    fn count(&self, symbol: Channel) -> u64 {
        self.counts
            .binary_search_by_key(&symbol, |c| c.0)
            .map_or(0, |i| self.counts[i].1)
    }

    fn distinct(&self) -> u64 {
        self.counts.len() as u64
    }
}

#[derive(Debug, Clone)]
pub struct VmmModel {
    kind: VmmKind,
    max_order: usize,
    min_frequency: u64,
    num_symbols: u32,
    contexts: HashMap<Vec<Channel>, ContextStats>,
    history: VecDeque<Channel>,
}

impl VmmModel {
    /// Order 8 for both; the suffix tree needs a context seen 3 times.
    pub fn new(kind: VmmKind, num_symbols: u32) -> Self {
        Self::with_params(kind, num_symbols, 8, 3)
    }

    pub fn with_params(kind: VmmKind, num_symbols: u32, max_order: usize, min_frequency: u64) -> Self {
        Self {
            kind,
            max_order,
            min_frequency,
            num_symbols: num_symbols.max(1),
            contexts: HashMap::new(),
            history: VecDeque::with_capacity(max_order + 1),
        }
    }

    pub fn kind(&self) -> VmmKind {
        self.kind
    }

    /// Counts `symbol` after every suffix of the recent history up to the
    /// maximum order, including the empty context.
    pub fn update(&mut self, symbol: Channel) {
        let hist: Vec<Channel> = self.history.iter().copied().collect();
        for k in 0..=hist.len() {
            let ctx = &hist[hist.len() - k..];
            match self.contexts.get_mut(ctx) {
                Some(stats) => stats.add(symbol),
                None => {
                    let mut stats = ContextStats::default();
                    stats.add(symbol);
                    self.contexts.insert(ctx.to_vec(), stats);
                }
            }
        }
        self.history.push_back(symbol);
        if self.history.len() > self.max_order {
            self.history.pop_front();
        }
    }

    /// Number of times `symbol` followed `context`.
    pub fn count(&self, context: &[Channel], symbol: Channel) -> u64 {
        self.contexts.get(context).map_or(0, |s| s.count(symbol))
    }

    /// Number of times `context` was followed by any symbol.
    pub fn context_count(&self, context: &[Channel]) -> u64 {
        self.contexts.get(context).map_or(0, |s| s.total)
    }

    fn suffix<'c>(&self, context: &'c [Channel]) -> &'c [Channel] {
        &context[context.len().saturating_sub(self.max_order)..]
    }

    /// Probability of `symbol` following `context`; `None` when the suffix
    /// tree has no sufficiently frequent context.
    pub fn probability(&self, context: &[Channel], symbol: Channel) -> Option<f64> {
        let ctx = self.suffix(context);
        match self.kind {
            VmmKind::Ppmc => {
                let mut p = 1.0 / self.num_symbols as f64;
                for k in 0..=ctx.len() {
                    if let Some(s) = self.contexts.get(&ctx[ctx.len() - k..]) {
                        let (n, d) = (s.total as f64, s.distinct() as f64);
                        p = s.count(symbol) as f64 / (n + d) + d / (n + d) * p;
                    }
                }
                Some(p)
            }
            VmmKind::Pst => {
                let gamma = 1.0 / (2.0 * self.num_symbols as f64);
                (1..=ctx.len()).rev().find_map(|k| {
                    let s = self.contexts.get(&ctx[ctx.len() - k..])?;
                    (s.total >= self.min_frequency)
                        .then(|| (s.count(symbol) as f64 + gamma) / (s.total as f64 + self.num_symbols as f64 * gamma))
                })
            }
        }
    }

    pub fn distribution(&self, context: &[Channel]) -> Option<Vec<f64>> {
        (0..self.num_symbols).map(|s| self.probability(context, s)).collect()
    }

    /// Probability of `symbol` as the next symbol after everything seen.
    pub fn next_probability(&self, symbol: Channel) -> Option<f64> {
        let hist: Vec<Channel> = self.history.iter().copied().collect();
        self.probability(&hist, symbol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Label};

    fn trained(kind: VmmKind, text: &str, symbols: u32) -> VmmModel {
        let mut m = VmmModel::new(kind, symbols);
        for b in text.bytes() {
            m.update(sym(b));
        }
        m
    }

    fn sym(b: u8) -> Channel {
        match b {
            b'a' => 0,
            b'b' => 1,
            b'n' => 2,
            _ => panic!("unexpected letter"),
        }
    }

    #[test]
    fn symbolize_orders_ties_by_channel() {
        let s = EventStream::new(vec![Event::new(3, 2), Event::new(1, 0), Event::new(3, 1)], 3).unwrap();
        assert_eq!(symbolize(&s), vec![0, 1, 2]);
        assert!(symbolize(&EventStream::empty(3)).is_empty());
        let s = EventStream::new(vec![Event::new(1, 0), Event::with_label(2, 1, Label::Dropped)], 3).unwrap();
        assert_eq!(symbolize(&s), vec![0]);
    }

    #[test]
    fn banana_counts() {
        let m = trained(VmmKind::Ppmc, "banana", 3);
        assert_eq!(m.count(&[sym(b'a'), sym(b'n')], sym(b'a')), 2);
        assert_eq!(m.context_count(&[]), 6);
        let one = trained(VmmKind::Ppmc, "b", 3);
        assert_eq!(one.contexts.len(), 1);
        assert_eq!(one.context_count(&[]), 1);
    }

    #[test]
    fn untrained_ppmc_is_uniform() {
        let m = VmmModel::new(VmmKind::Ppmc, 30);
        for s in 0..30 {
            assert!((m.probability(&[4, 7], s).unwrap() - 1.0 / 30.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ppmc_banana_worksheet() {
        // order 2 "an": a=2 of N=2, D=1; order 1 "n": a=2 of N=2, D=1;
        // order 0: b=1 a=3 n=2, N=6, D=3; order -1: 1/3.
        // P0 = 3/9 + 3/9 * 1/3 = 4/9; P1 = 2/3 + 1/3 * 4/9 = 22/27;
        // P2 = 2/3 + 1/3 * 22/27 = 76/81
        let m = trained(VmmKind::Ppmc, "banana", 3);
        let ctx = [sym(b'a'), sym(b'n')];
        assert!((m.probability(&ctx, sym(b'a')).unwrap() - 76.0 / 81.0).abs() < 1e-12);
        let total: f64 = m.distribution(&ctx).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pst_banana_has_no_estimate() {
        let m = trained(VmmKind::Pst, "banana", 3);
        assert_eq!(m.probability(&[sym(b'a'), sym(b'n')], sym(b'a')), None);
        // context "a" was followed by a symbol twice as well
        assert_eq!(m.probability(&[sym(b'a')], sym(b'n')), None);
    }

    #[test]
    fn pst_uses_longest_frequent_context() {
        let m = trained(VmmKind::Pst, "bananabanana", 3);
        // "an" now seen 4 times, always followed by a
        let gamma = 1.0 / 6.0;
        let expect = (4.0 + gamma) / (4.0 + 3.0 * gamma);
        assert!((m.probability(&[sym(b'a'), sym(b'n')], sym(b'a')).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn next_probability_uses_history() {
        let m = trained(VmmKind::Ppmc, "banan", 3);
        assert_eq!(m.next_probability(0), m.probability(&[1, 0, 2, 0, 2], 0));
    }
}
