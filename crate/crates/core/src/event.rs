//! Events, event streams, history windows and subsequences.
//!
//! Time is discrete: one unit is one simulation step. A history window holds
//! the events in the half-open interval `[t - M, t)` expressed as delays
//! relative to `t`, so it carries no absolute timing. Subsequences are ordered
//! subsets of a window and are the unit that stored patterns are built from.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Time = u64;
pub type Delay = u32;
pub type Channel = u32;

/// Provenance of an event, used only for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Signal,
    Interference,
    Noise,
    /// Removed on input: hidden from every algorithm, still visible to scoring.
    Dropped,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Signal => "signal",
            Label::Interference => "interference",
            Label::Noise => "noise",
            Label::Dropped => "dropped",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "signal" => Ok(Label::Signal),
            "interference" => Ok(Label::Interference),
            "noise" => Ok(Label::Noise),
            "dropped" => Ok(Label::Dropped),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub time: Time,
    pub channel: Channel,
    pub label: Label,
}

impl Event {
    pub fn new(time: Time, channel: Channel) -> Self {
        Self {
            time,
            channel,
            label: Label::Signal,
        }
    }

    pub fn with_label(time: Time, channel: Channel, label: Label) -> Self {
        Self { time, channel, label }
    }

    /// Whether the algorithms get to see this event.
    pub fn is_observed(&self) -> bool {
        self.label != Label::Dropped
    }
}

/// A multi-channel event stream sorted by time.
///
/// Ties are legal and are kept in ascending channel order so that every
/// consumer sees the same canonical ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    events: Vec<Event>,
    num_channels: u32,
}

impl EventStream {
    pub fn new(mut events: Vec<Event>, num_channels: u32) -> Result<Self> {
        if num_channels == 0 {
            return Err(Error::InvalidParams("num_channels must be positive".into()));
        }
        if let Some(e) = events.iter().find(|e| e.channel >= num_channels) {
            return Err(Error::InvalidParams(format!(
                "channel {} out of range for {} channels",
                e.channel, num_channels
            )));
        }
        events.sort_by_key(|e| (e.time, e.channel, e.label));
        Ok(Self { events, num_channels })
    }

    pub fn empty(num_channels: u32) -> Self {
        Self {
            events: Vec::new(),
            num_channels: num_channels.max(1),
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn num_channels(&self) -> u32 {
        self.num_channels
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn end_time(&self) -> Time {
        self.events.last().map_or(0, |e| e.time)
    }

    /// Events visible to the algorithms (everything not labelled dropped).
    pub fn observed(&self) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(|e| e.is_observed())
    }

    /// The same stream with every event moved `delta` steps later.
    pub fn shifted(&self, delta: Time) -> Self {
        let events = self
            .events
            .iter()
            .map(|e| Event {
                time: e.time + delta,
                ..*e
            })
            .collect();
        Self {
            events,
            num_channels: self.num_channels,
        }
    }

    /// Parses the `time,channel[,label]` text format. Blank lines and lines
    /// starting with `#` are skipped. When `num_channels` is `None` it is
    /// inferred as one more than the largest channel seen.
    pub fn parse(text: &str, num_channels: Option<u32>) -> Result<Self> {
        let mut events = Vec::new();
        let mut last_time = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let mut fields = line.split(',').map(str::trim);
            let time: Time = fields
                .next()
                .ok_or_else(|| err("missing time".into()))?
                .parse()
                .map_err(|e| err(format!("bad time: {e}")))?;
            let channel: Channel = fields
                .next()
                .ok_or_else(|| err("missing channel".into()))?
                .parse()
                .map_err(|e| err(format!("bad channel: {e}")))?;
            let label = match fields.next() {
                Some(s) => s.parse().map_err(err)?,
                None => Label::Signal,
            };
            if fields.next().is_some() {
                return Err(err("too many fields".into()));
            }
            if time < last_time {
                return Err(err(format!("time {time} decreases (previous {last_time})")));
            }
            last_time = time;
            events.push(Event { time, channel, label });
        }
        let inferred = events.iter().map(|e| e.channel + 1).max().unwrap_or(1);
        Self::new(events, num_channels.unwrap_or(inferred))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 12);
        for e in &self.events {
            out.push_str(&format!("{},{},{}\n", e.time, e.channel, e.label));
        }
        out
    }
}

/// One `(delay, channel)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entry {
    pub delay: Delay,
    pub channel: Channel,
}

impl Entry {
    pub fn new(delay: Delay, channel: Channel) -> Self {
        Self { delay, channel }
    }
}

/// The relative history `W_t` of a stream at time `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryWindow {
    entries: Vec<Entry>,
    length: Delay,
}

impl HistoryWindow {
    /// Builds a window from raw entries; entries outside `(0, length]` are
    /// discarded and the rest sorted by `(delay, channel)`.
    pub fn from_entries(mut entries: Vec<Entry>, length: Delay) -> Self {
        entries.retain(|e| e.delay > 0 && e.delay <= length);
        entries.sort();
        Self { entries, length }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn length(&self) -> Delay {
        self.length
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The window with one entry removed.
    pub fn without(&self, index: usize) -> Self {
        let mut entries = self.entries.clone();
        entries.remove(index);
        Self {
            entries,
            length: self.length,
        }
    }
}

/// `W_t`: observed events with `t_k` in `[t - M, t)` as `(t - t_k, c_k)`.
pub fn window_of(stream: &EventStream, t: Time, length: Delay) -> HistoryWindow {
    window_from_events(stream.events(), t, length)
}

/// Same as [`window_of`] over a time-sorted event slice.
pub fn window_from_events(events: &[Event], t: Time, length: Delay) -> HistoryWindow {
    let lo = t.saturating_sub(length as Time);
    let start = events.partition_point(|e| e.time < lo);
    let end = events.partition_point(|e| e.time < t);
    let entries = events[start..end]
        .iter()
        .filter(|e| e.is_observed())
        .map(|e| Entry::new((t - e.time) as Delay, e.channel))
        .collect();
    HistoryWindow::from_entries(entries, length)
}

/// An ordered subset of window events: delays non-decreasing, simultaneous
/// items in ascending channel order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsequence {
    items: Vec<Entry>,
}

impl Subsequence {
    pub fn new(mut items: Vec<Entry>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidParams("subsequence must not be empty".into()));
        }
        items.sort();
        Ok(Self { items })
    }

    pub(crate) fn from_sorted(items: Vec<Entry>) -> Self {
        debug_assert!(!items.is_empty());
        debug_assert!(items.windows(2).all(|w| w[0] <= w[1]));
        Self { items }
    }

    pub fn items(&self) -> &[Entry] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Canonical ordering: lexicographic on the delay list, then on the
    /// channel list.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        let delays = |s: &Self| s.items.iter().map(|e| e.delay).collect::<Vec<_>>();
        let channels = |s: &Self| s.items.iter().map(|e| e.channel).collect::<Vec<_>>();
        delays(self)
            .cmp(&delays(other))
            .then_with(|| channels(self).cmp(&channels(other)))
    }
}

impl fmt::Display for Subsequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}@{}", e.channel, e.delay)?;
        }
        f.write_str("]")
    }
}

/// Every subset of the window with `min_len <= size <= max_len` whose
/// consecutive items are at most `max_gap` apart, in canonical order and
/// without duplicates. `max_gap = None` means unbounded.
pub fn enumerate_subsequences(
    window: &HistoryWindow,
    min_len: usize,
    max_len: usize,
    max_gap: Option<Delay>,
) -> Vec<Subsequence> {
    fn extend(
        entries: &[Entry],
        from: usize,
        current: &mut Vec<Entry>,
        bounds: (usize, usize),
        max_gap: Option<Delay>,
        out: &mut Vec<Subsequence>,
    ) {
        if current.len() >= bounds.0 {
            out.push(Subsequence::from_sorted(current.clone()));
        }
        if current.len() == bounds.1 {
            return;
        }
        for i in from..entries.len() {
            let e = entries[i];
            if let (Some(last), Some(gap)) = (current.last(), max_gap) {
                if e.delay - last.delay > gap {
                    // entries are sorted, so every later one is further away
                    break;
                }
            }
            current.push(e);
            extend(entries, i + 1, current, bounds, max_gap, out);
            current.pop();
        }
    }

    let min_len = min_len.max(1);
    if max_len < min_len {
        return Vec::new();
    }
    let mut out = Vec::new();
    extend(
        window.entries(),
        0,
        &mut Vec::new(),
        (min_len, max_len),
        max_gap,
        &mut out,
    );
    out.sort_by(|a, b| a.canonical_cmp(b));
    out.dedup();
    out
}

/// Whether the items of `sub` can be assigned to distinct window entries of
/// the same channel whose delays are within `tol` of the stored delays.
pub fn subsequence_matches(sub: &Subsequence, window: &HistoryWindow, tol: Delay) -> bool {
    items_match(sub.items(), window.entries(), tol)
}

/// Bipartite matching (augmenting paths) between pattern items and entries.
pub(crate) fn items_match(items: &[Entry], entries: &[Entry], tol: Delay) -> bool {
    fn augment(
        item: usize,
        items: &[Entry],
        entries: &[Entry],
        tol: Delay,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for (j, e) in entries.iter().enumerate() {
            if seen[j] || e.channel != items[item].channel || e.delay.abs_diff(items[item].delay) > tol {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|other| augment(other, items, entries, tol, seen, owner)) {
                owner[j] = Some(item);
                return true;
            }
        }
        false
    }

    if items.len() > entries.len() {
        return false;
    }
    let mut owner = vec![None; entries.len()];
    for i in 0..items.len() {
        let mut seen = vec![false; entries.len()];
        if !augment(i, items, entries, tol, &mut seen, &mut owner) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(evts: &[(Time, Channel)]) -> EventStream {
        EventStream::new(evts.iter().map(|&(t, c)| Event::new(t, c)).collect(), 8).unwrap()
    }

    fn win(entries: &[(Delay, Channel)], length: Delay) -> HistoryWindow {
        HistoryWindow::from_entries(entries.iter().map(|&(d, c)| Entry::new(d, c)).collect(), length)
    }

    fn sub(entries: &[(Delay, Channel)]) -> Subsequence {
        Subsequence::new(entries.iter().map(|&(d, c)| Entry::new(d, c)).collect()).unwrap()
    }

    #[test]
    fn window_is_half_open() {
        let s = stream(&[(2, 0), (5, 1), (9, 2)]);
        let w = window_of(&s, 9, 8);
        assert_eq!(w.entries(), &[Entry::new(4, 1), Entry::new(7, 0)]);
        assert!(window_of(&EventStream::empty(3), 50, 8).is_empty());
    }

    #[test]
    fn window_skips_dropped_events() {
        let events = vec![Event::new(1, 0), Event::with_label(3, 1, Label::Dropped)];
        let s = EventStream::new(events, 2).unwrap();
        assert_eq!(window_of(&s, 4, 8).entries(), &[Entry::new(3, 0)]);
    }

    #[test]
    fn window_near_time_zero() {
        let s = stream(&[(0, 1), (1, 2)]);
        let w = window_of(&s, 2, 32);
        assert_eq!(w.entries(), &[Entry::new(1, 2), Entry::new(2, 1)]);
    }

    #[test]
    fn power_set_cardinality() {
        let w = win(&[(1, 0), (4, 1), (6, 2)], 8);
        assert_eq!(enumerate_subsequences(&w, 1, 3, None).len(), 7);
    }

    #[test]
    fn gap_filter() {
        let w = win(&[(1, 0), (5, 1)], 8);
        assert!(enumerate_subsequences(&w, 2, 2, Some(3)).is_empty());
        assert_eq!(enumerate_subsequences(&w, 2, 2, Some(4)).len(), 1);
    }

    #[test]
    fn simultaneous_items_ordered_by_channel() {
        let s = sub(&[(3, 5), (3, 1), (1, 2)]);
        assert_eq!(s.items(), &[Entry::new(1, 2), Entry::new(3, 1), Entry::new(3, 5)]);
    }

    #[test]
    fn canonical_order_is_delays_then_channels() {
        let a = sub(&[(1, 9), (2, 0)]);
        let b = sub(&[(1, 0), (3, 0)]);
        let c = sub(&[(1, 1), (2, 0)]);
        assert!(a.canonical_cmp(&b).is_lt());
        assert!(c.canonical_cmp(&a).is_lt());
    }

    #[test]
    fn matching_interval_boundaries() {
        let w = win(&[(3, 0), (7, 1)], 8);
        assert!(subsequence_matches(&sub(&[(3, 0)]), &w, 0));
        let w = win(&[(5, 0)], 8);
        assert!(!subsequence_matches(&sub(&[(3, 0)]), &w, 1));
        assert!(subsequence_matches(&sub(&[(3, 0)]), &w, 2));
    }

    #[test]
    fn matching_is_injective() {
        let w = win(&[(4, 0)], 8);
        assert!(!subsequence_matches(&sub(&[(3, 0), (5, 0)]), &w, 1));
        let w = win(&[(4, 0), (6, 0)], 8);
        assert!(subsequence_matches(&sub(&[(3, 0), (5, 0)]), &w, 1));
    }

    #[test]
    fn matching_needs_augmenting_paths() {
        // greedy assignment of the first item to delay 4 would strand the second
        let w = win(&[(2, 0), (4, 0)], 8);
        assert!(subsequence_matches(&sub(&[(3, 0), (5, 0)]), &w, 1));
    }

    #[test]
    fn parse_and_write_round_trip() {
        let text = "# header\n1,0\n3,2,noise\n3,1,dropped\n";
        let s = EventStream::parse(text, None).unwrap();
        assert_eq!(s.num_channels(), 3);
        assert_eq!(s.events()[0].label, Label::Signal);
        let again = EventStream::parse(&s.to_text(), Some(3)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(
            EventStream::parse("5,0\n3,0\n", None),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(EventStream::parse("1,x\n", None).is_err());
        assert!(EventStream::parse("1,0,bogus\n", None).is_err());
        assert!(EventStream::parse("1,4\n", Some(3)).is_err());
    }
}
