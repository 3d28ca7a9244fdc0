//! Scoring of run outputs against labeled streams.
//!
//! EPST runs are kept as the sequence of spike-triggered predictions. They are
//! replayed into a dense `(channel, time)` grid where each trigger overwrites
//! the cells it covers, and every scored event reads the grid as it stood
//! before any trigger at the event's own time. The per-step estimates between
//! consecutive events are marginalised into a next-event distribution over
//! channels, which makes them comparable with sequential models.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Channel, Delay, EventStream, Label, Time};

pub const DEFAULT_BIN_WIDTH: Time = 250;

/// Nonzero cells of one spike-triggered prediction as `(channel, n, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub time: Time,
    pub cells: Vec<(Channel, u16, f64)>,
}

/// Dense grid of the most recent estimate per `(channel, time)`.
#[derive(Debug, Clone)]
pub struct Timeline {
    num_channels: u32,
    horizon: Time,
    width: Delay,
    values: Vec<f64>,
}

impl Timeline {
    /// Cells for times `0..horizon`; predictions spanning `0..=width` steps.
    pub fn new(num_channels: u32, horizon: Time, width: Delay) -> Self {
        Self {
            num_channels,
            horizon,
            width,
            values: vec![0.0; num_channels as usize * horizon as usize],
        }
    }

    pub fn num_channels(&self) -> u32 {
        self.num_channels
    }

    pub fn get(&self, channel: Channel, time: Time) -> f64 {
        if channel >= self.num_channels || time >= self.horizon {
            return 0.0;
        }
        self.values[time as usize * self.num_channels as usize + channel as usize]
    }

    pub fn set(&mut self, channel: Channel, time: Time, p: f64) {
        if channel < self.num_channels && time < self.horizon {
            self.values[time as usize * self.num_channels as usize + channel as usize] = p;
        }
    }

    /// Overwrites every cell in `[time, time + width]`, zeros included.
    pub fn apply(&mut self, trigger: &TriggerRecord) {
        let c = self.num_channels as usize;
        let lo = trigger.time.min(self.horizon) as usize;
        let hi = (trigger.time + self.width as Time + 1).min(self.horizon) as usize;
        self.values[lo * c..hi * c].fill(0.0);
        for &(ch, n, p) in &trigger.cells {
            self.set(ch, trigger.time + n as Time, p);
        }
    }
}

/// Marginal probability that the next event is in `channel`: the channel's
/// mass over times `(lower, upper]` divided by the mass of all channels,
/// with masked cells counted as zero. Zero total mass gives 0.
pub fn next_event_probability(
    timeline: &Timeline,
    channel: Channel,
    lower: i64,
    upper: i64,
    masked: &dyn Fn(Channel, Time) -> bool,
) -> f64 {
    let mut own = 0.0;
    let mut total = 0.0;
    let lo = (lower + 1).max(0);
    for t in lo..=upper {
        let t = t as Time;
        for c in 0..timeline.num_channels() {
            let p = timeline.get(c, t);
            if p == 0.0 || masked(c, t) {
                continue;
            }
            total += p;
            if c == channel {
                own += p;
            }
        }
    }
    if total > 0.0 {
        own / total
    } else {
        0.0
    }
}

/// One stream of events scored together.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringGroup {
    pub name: &'static str,
    /// Labels scored in this group; their events also advance `t_prev`.
    pub members: Vec<Label>,
    /// Cells of events with these labels are zeroed unless a member event
    /// shares the cell.
    pub masked: Vec<Label>,
    /// Extension of the summation past the event time.
    pub pad: Delay,
    /// Whether cells used by one event are excluded for the next.
    pub consume: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringRule {
    Plain,
    Structured,
    RandomNoise,
    Dropout,
    Jitter { pad: Delay },
    JitterDropout { pad: Delay },
}

impl ScoringRule {
    pub fn groups(self) -> Vec<ScoringGroup> {
        use Label::*;
        let group = |name, members: Vec<Label>, masked: Vec<Label>, pad, consume| ScoringGroup {
            name,
            members,
            masked,
            pad,
            consume,
        };
        match self {
            ScoringRule::Plain => vec![group("all", vec![Signal, Interference, Dropped], vec![], 0, false)],
            ScoringRule::Structured => vec![
                group("signal", vec![Signal], vec![Interference], 0, false),
                group("interference", vec![Interference], vec![Signal], 0, false),
            ],
            ScoringRule::RandomNoise => vec![group("signal", vec![Signal], vec![], 0, false)],
            ScoringRule::Dropout => vec![group("signal", vec![Signal, Dropped], vec![], 0, false)],
            ScoringRule::Jitter { pad } => vec![group("signal", vec![Signal, Interference], vec![], pad, true)],
            ScoringRule::JitterDropout { pad } => {
                vec![group("signal", vec![Signal, Interference, Dropped], vec![], pad, true)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEvent {
    pub time: Time,
    pub group: usize,
    pub error: f64,
}

/// Scores EPST triggers against `stream`. `width` is the prediction window.
pub fn score_epst(
    triggers: &[TriggerRecord],
    stream: &EventStream,
    width: Delay,
    rule: ScoringRule,
) -> Vec<ScoredEvent> {
    let groups = rule.groups();
    let events = stream.events();
    let max_pad = groups.iter().map(|g| g.pad).max().unwrap_or(0) as Time;
    let horizon = stream.end_time().max(triggers.last().map_or(0, |t| t.time)) + width as Time + max_pad + 2;
    let mut timeline = Timeline::new(stream.num_channels(), horizon, width);

    let cells_of = |labels: &[Label]| -> HashSet<(Channel, Time)> {
        events
            .iter()
            .filter(|e| labels.contains(&e.label))
            .map(|e| (e.channel, e.time))
            .collect()
    };
    let member_cells: Vec<HashSet<(Channel, Time)>> = groups.iter().map(|g| cells_of(&g.members)).collect();
    let mask_cells: Vec<HashSet<(Channel, Time)>> = groups.iter().map(|g| cells_of(&g.masked)).collect();

    let mut prev: Vec<Option<Time>> = vec![None; groups.len()];
    let mut out = Vec::new();
    let mut next_trigger = 0;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        while next_trigger < triggers.len() && triggers[next_trigger].time < t {
            timeline.apply(&triggers[next_trigger]);
            next_trigger += 1;
        }
        let j = i + events[i..].partition_point(|e| e.time == t);
        let mut touched = vec![false; groups.len()];
        for e in &events[i..j] {
            for (gi, g) in groups.iter().enumerate() {
                if !g.members.contains(&e.label) {
                    continue;
                }
                touched[gi] = true;
                let start = match prev[gi] {
                    Some(p) if g.consume => p as i64 + g.pad as i64,
                    Some(p) => p as i64,
                    None => -1,
                };
                let lower = start.max(t as i64 - width as i64);
                let upper = t as i64 + g.pad as i64;
                let (mine, mask) = (&member_cells[gi], &mask_cells[gi]);
                let masked = |c: Channel, tt: Time| mask.contains(&(c, tt)) && !mine.contains(&(c, tt));
                let p = next_event_probability(&timeline, e.channel, lower, upper, &masked);
                out.push(ScoredEvent {
                    time: t,
                    group: gi,
                    error: (1.0 - p).abs(),
                });
            }
        }
        for (gi, hit) in touched.into_iter().enumerate() {
            if hit {
                prev[gi] = Some(t);
            }
        }
        i = j;
    }
    out
}

/// Scores per-event next-symbol probabilities of a sequential model. `probs`
/// is aligned with `stream.events()`; `None` means no estimate.
pub fn score_vmm(probs: &[Option<f64>], stream: &EventStream, rule: ScoringRule) -> Vec<ScoredEvent> {
    let groups = rule.groups();
    let mut out = Vec::new();
    for (e, p) in stream.events().iter().zip(probs) {
        for (gi, g) in groups.iter().enumerate() {
            if g.members.contains(&e.label) {
                let p = p.unwrap_or(0.0);
                out.push(ScoredEvent {
                    time: e.time,
                    group: gi,
                    error: (1.0 - p).abs(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub start: Time,
    pub mean_error: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTrace {
    pub bin_width: Time,
    pub bins: Vec<Bin>,
}

impl ErrorTrace {
    /// Bins `[k w, (k+1) w)` covering `0..span`, built from the scored events
    /// of `group` (all groups when `None`).
    pub fn from_scores(scores: &[ScoredEvent], group: Option<usize>, bin_width: Time, span: Time) -> Self {
        let n = span.div_ceil(bin_width) as usize;
        let mut sums = vec![(0.0, 0u64); n];
        for s in scores {
            if group.is_some_and(|g| g != s.group) {
                continue;
            }
            let b = (s.time / bin_width) as usize;
            if b < n {
                sums[b].0 += s.error;
                sums[b].1 += 1;
            }
        }
        let bins = sums
            .into_iter()
            .enumerate()
            .map(|(k, (sum, count))| Bin {
                start: k as Time * bin_width,
                mean_error: if count > 0 { sum / count as f64 } else { 0.0 },
                samples: count,
            })
            .collect();
        Self { bin_width, bins }
    }

    /// Sample-weighted mean error of bins starting in `[from, to)`.
    pub fn mean_over(&self, from: Time, to: Time) -> Option<f64> {
        let (mut sum, mut count) = (0.0, 0u64);
        for b in self.bins.iter().filter(|b| b.start >= from && b.start < to) {
            sum += b.mean_error * b.samples as f64;
            count += b.samples;
        }
        (count > 0).then(|| sum / count as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,mean_error,samples\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{:.6},{}", b.start, b.mean_error, b.samples);
        }
        out
    }
}

/// Per-bin mean over the traces that have samples in the bin.
pub fn aggregate_runs(traces: &[ErrorTrace]) -> Result<ErrorTrace> {
    let Some(first) = traces.first() else {
        return Err(Error::Config("no traces to aggregate".into()));
    };
    for t in traces {
        let same = t.bin_width == first.bin_width
            && t.bins.len() == first.bins.len()
            && t.bins.iter().zip(&first.bins).all(|(a, b)| a.start == b.start);
        if !same {
            return Err(Error::Config("traces do not share binning".into()));
        }
    }
    let bins = (0..first.bins.len())
        .map(|k| {
            let (mut sum, mut n, mut samples) = (0.0, 0u64, 0u64);
            for t in traces {
                let b = t.bins[k];
                if b.samples > 0 {
                    sum += b.mean_error;
                    n += 1;
                    samples += b.samples;
                }
            }
            Bin {
                start: first.bins[k].start,
                mean_error: if n > 0 { sum / n as f64 } else { 0.0 },
                samples,
            }
        })
        .collect();
    Ok(ErrorTrace {
        bin_width: first.bin_width,
        bins,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTrace {
    pub bin_width: Time,
    /// `(bin start, count)`.
    pub bins: Vec<(Time, f64)>,
}

impl CountTrace {
    pub fn to_csv(&self, algorithm: &str) -> String {
        let mut out = String::from("bin_start,count,algorithm\n");
        for (start, count) in &self.bins {
            let _ = writeln!(out, "{start},{count},{algorithm}");
        }
        out
    }

    pub fn total_over(&self, from: Time, to: Time) -> f64 {
        self.bins.iter().filter(|b| b.0 >= from && b.0 < to).map(|b| b.1).sum()
    }

    /// Start of the first bin at or after `from` from which every later bin
    /// is zero.
    pub fn zero_point(&self, from: Time) -> Option<Time> {
        let mut point = None;
        for &(start, count) in self.bins.iter().filter(|b| b.0 >= from) {
            if count > 0.0 {
                point = None;
            } else if point.is_none() {
                point = Some(start);
            }
        }
        point
    }

    /// Per-bin mean over several runs.
    pub fn mean(traces: &[CountTrace]) -> Result<CountTrace> {
        let Some(first) = traces.first() else {
            return Err(Error::Config("no traces to aggregate".into()));
        };
        if traces
            .iter()
            .any(|t| t.bin_width != first.bin_width || t.bins.len() != first.bins.len())
        {
            return Err(Error::Config("traces do not share binning".into()));
        }
        let n = traces.len() as f64;
        let bins = (0..first.bins.len())
            .map(|k| (first.bins[k].0, traces.iter().map(|t| t.bins[k].1).sum::<f64>() / n))
            .collect();
        Ok(CountTrace {
            bin_width: first.bin_width,
            bins,
        })
    }
}

/// Cells whose estimate, taken from triggers strictly before the cell's
/// time, is at least `threshold` while no signal, interference or dropped
/// event occupies the cell. Binned over `0..span`.
pub fn count_false_positives(
    triggers: &[TriggerRecord],
    stream: &EventStream,
    width: Delay,
    threshold: f64,
    bin_width: Time,
    span: Time,
) -> CountTrace {
    let truth: HashSet<(Channel, Time)> = stream
        .events()
        .iter()
        .filter(|e| e.label != Label::Noise)
        .map(|e| (e.channel, e.time))
        .collect();
    let horizon = span.max(triggers.last().map_or(0, |t| t.time) + width as Time + 1);
    let mut timeline = Timeline::new(stream.num_channels(), horizon, width);
    let n = span.div_ceil(bin_width) as usize;
    let mut counts = vec![0u64; n];
    let mut column = 0;
    let mut finish_until = |timeline: &Timeline, upto: Time, column: &mut Time| {
        while *column < upto.min(span) {
            let t = *column;
            for c in 0..timeline.num_channels() {
                if timeline.get(c, t) >= threshold && !truth.contains(&(c, t)) {
                    counts[(t / bin_width) as usize] += 1;
                }
            }
            *column += 1;
        }
    };
    for tr in triggers {
        // columns up to and including the trigger time use earlier triggers
        finish_until(&timeline, tr.time + 1, &mut column);
        timeline.apply(tr);
    }
    finish_until(&timeline, span, &mut column);
    CountTrace {
        bin_width,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| (k as Time * bin_width, c as f64))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;

    fn never(_: Channel, _: Time) -> bool {
        false
    }

    #[test]
    fn sole_mass_is_certain() {
        let mut tl = Timeline::new(3, 100, 40);
        tl.set(1, 20, 0.4);
        assert_eq!(next_event_probability(&tl, 1, 10, 20, &never), 1.0);
        assert_eq!(next_event_probability(&tl, 0, 10, 20, &never), 0.0);
        assert_eq!(next_event_probability(&tl, 1, 20, 30, &never), 0.0);
        let empty = Timeline::new(3, 100, 40);
        assert_eq!(next_event_probability(&empty, 0, 0, 50, &never), 0.0);
    }

    #[test]
    fn masked_cells_are_ignored() {
        let mut tl = Timeline::new(2, 100, 40);
        tl.set(0, 5, 1.0);
        tl.set(1, 6, 1.0);
        assert_eq!(next_event_probability(&tl, 0, 0, 10, &never), 0.5);
        let mask = |c: Channel, t: Time| c == 1 && t == 6;
        assert_eq!(next_event_probability(&tl, 0, 0, 10, &mask), 1.0);
    }

    #[test]
    fn latest_trigger_overwrites_its_span() {
        let mut tl = Timeline::new(2, 100, 10);
        tl.apply(&TriggerRecord {
            time: 0,
            cells: vec![(0, 5, 1.0), (1, 9, 0.5)],
        });
        tl.apply(&TriggerRecord {
            time: 7,
            cells: vec![(1, 3, 0.25)],
        });
        assert_eq!(tl.get(0, 5), 1.0);
        assert_eq!(tl.get(1, 9), 0.0);
        assert_eq!(tl.get(1, 10), 0.25);
    }

    fn stream(events: &[(Time, Channel, Label)]) -> EventStream {
        EventStream::new(events.iter().map(|&(t, c, l)| Event::with_label(t, c, l)).collect(), 4).unwrap()
    }

    #[test]
    fn perfect_and_silent_predictors() {
        let s = stream(&[(10, 0, Label::Signal), (20, 1, Label::Signal), (30, 2, Label::Signal)]);
        let perfect = vec![
            TriggerRecord {
                time: 10,
                cells: vec![(1, 10, 1.0)],
            },
            TriggerRecord {
                time: 20,
                cells: vec![(2, 10, 1.0)],
            },
        ];
        let errors: Vec<f64> = score_epst(&perfect, &s, 40, ScoringRule::Plain)
            .iter()
            .map(|e| e.error)
            .collect();
        assert_eq!(errors, vec![1.0, 0.0, 0.0]);
        let silent: Vec<TriggerRecord> = vec![];
        assert!(score_epst(&silent, &s, 40, ScoringRule::Plain)
            .iter()
            .all(|e| e.error == 1.0));
    }

    #[test]
    fn no_peeking_at_own_trigger() {
        let s = stream(&[(10, 0, Label::Signal), (20, 1, Label::Signal)]);
        // a trigger at 20 predicting its own time must not be used for it
        let late = vec![TriggerRecord {
            time: 20,
            cells: vec![(1, 0, 1.0)],
        }];
        assert_eq!(score_epst(&late, &s, 40, ScoringRule::Plain)[1].error, 1.0);
    }

    #[test]
    fn structured_worksheet() {
        // signal s at 10 (ch0), 22 (ch1); interference i at 15 (ch2), 25 (ch3)
        let s = stream(&[
            (10, 0, Label::Signal),
            (15, 2, Label::Interference),
            (22, 1, Label::Signal),
            (25, 3, Label::Interference),
            (34, 0, Label::Signal),
            (35, 2, Label::Interference),
        ]);
        let triggers = vec![
            TriggerRecord {
                time: 10,
                cells: vec![(1, 12, 0.5), (2, 5, 1.0), (3, 15, 0.5)],
            },
            TriggerRecord {
                time: 15,
                cells: vec![(1, 7, 0.5), (3, 10, 1.0), (0, 19, 1.0)],
            },
            TriggerRecord {
                time: 22,
                cells: vec![(3, 3, 1.0), (0, 12, 1.0)],
            },
        ];
        let scored = score_epst(&triggers, &s, 40, ScoringRule::Structured);
        let sig: Vec<f64> = scored.iter().filter(|e| e.group == 0).map(|e| e.error).collect();
        let int: Vec<f64> = scored.iter().filter(|e| e.group == 1).map(|e| e.error).collect();
        // signal at 10: nothing predicted yet -> error 1
        // signal at 22: window (10, 22]; trigger 15 cleared (2,15), so only
        //   (1,22)=0.5 remains -> p = 1, error 0
        // signal at 34: window (22, 34]; (3,25)=1.0 masked, (0,34)=1.0 -> error 0
        assert_eq!(sig, vec![1.0, 0.0, 0.0]);
        // interference at 15: window (-1, 15], only trigger 10 applies:
        //   (2,15)=1.0 and (1,22) lies outside -> error 0
        // interference at 25: window (15, 25]; trigger 22 cleared (1,22),
        //   (3,25)=1.0 -> error 0
        // interference at 35: window (25, 35]; (0,34)=1.0 masked -> error 1
        assert_eq!(int, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn jitter_pad_captures_early_mass() {
        let s = stream(&[(10, 0, Label::Signal), (17, 1, Label::Signal), (21, 2, Label::Signal)]);
        // event at 17 was predicted at 20 (jittered early by 3)
        let triggers = vec![TriggerRecord {
            time: 10,
            cells: vec![(1, 10, 1.0), (2, 11, 1.0)],
        }];
        let plain = score_epst(&triggers, &s, 40, ScoringRule::Plain);
        assert_eq!(plain[1].error, 1.0);
        let padded = score_epst(&triggers, &s, 40, ScoringRule::Jitter { pad: 4 });
        // (14, 21] holds (1,20) and (2,21): p(ch1) = 0.5
        assert_eq!(padded[1].error, 0.5);
        // the next window starts after the consumed 21: (21, 25] is empty
        assert_eq!(padded[2].error, 1.0);
    }

    #[test]
    fn padded_windows_exclude_consumed_cells() {
        let s = stream(&[(10, 0, Label::Signal), (20, 1, Label::Signal), (22, 2, Label::Signal)]);
        let triggers = vec![TriggerRecord {
            time: 10,
            cells: vec![(1, 12, 1.0), (2, 15, 1.0)],
        }];
        let scored = score_epst(&triggers, &s, 40, ScoringRule::Jitter { pad: 4 });
        // event 20 sees (14, 24]: only (1,22)
        assert_eq!(scored[1].error, 0.0);
        // event 22 sees (24, 26]: only (2,25)
        assert_eq!(scored[2].error, 0.0);
    }

    #[test]
    fn noise_only_stream_has_no_samples() {
        let s = stream(&[(10, 0, Label::Noise), (20, 1, Label::Noise)]);
        let scored = score_epst(&[], &s, 40, ScoringRule::RandomNoise);
        assert!(scored.is_empty());
        let trace = ErrorTrace::from_scores(&scored, None, 250, 1000);
        assert!(trace.bins.iter().all(|b| b.samples == 0));
    }

    #[test]
    fn dropped_events_are_scored() {
        let s = stream(&[(10, 0, Label::Signal), (20, 1, Label::Dropped)]);
        let scored = score_epst(&[], &s, 40, ScoringRule::Dropout);
        assert_eq!(scored.len(), 2);
        assert_eq!(scored[1].error, 1.0);
        let probs = [Some(1.0), None];
        let v = score_vmm(&probs, &s, ScoringRule::Dropout);
        assert_eq!(v.iter().map(|e| e.error).collect::<Vec<_>>(), vec![0.0, 1.0]);
    }

    #[test]
    fn binning_and_aggregation() {
        let scores = [
            ScoredEvent {
                time: 10,
                group: 0,
                error: 0.2,
            },
            ScoredEvent {
                time: 20,
                group: 0,
                error: 0.4,
            },
            ScoredEvent {
                time: 260,
                group: 1,
                error: 1.0,
            },
        ];
        let t = ErrorTrace::from_scores(&scores, None, 250, 600);
        assert_eq!(t.bins.len(), 3);
        assert!((t.bins[0].mean_error - 0.3).abs() < 1e-12);
        assert_eq!(t.bins[2].samples, 0);
        assert_eq!(ErrorTrace::from_scores(&scores, Some(0), 250, 600).bins[1].samples, 0);
        let agg = aggregate_runs(std::slice::from_ref(&t)).unwrap();
        assert_eq!(agg, t);
        let other = ErrorTrace::from_scores(&scores, None, 100, 600);
        assert!(aggregate_runs(&[t.clone(), other]).is_err());
        assert!(t.to_csv().starts_with("bin_start,mean_error,samples\n0,0.300000,2\n"));
    }

    #[test]
    fn aggregate_constant_traces() {
        let mk = |v: f64| ErrorTrace {
            bin_width: 250,
            bins: (0..4)
                .map(|k| Bin {
                    start: k * 250,
                    mean_error: v,
                    samples: 3,
                })
                .collect(),
        };
        let agg = aggregate_runs(&[mk(0.2), mk(0.4)]).unwrap();
        assert!(agg
            .bins
            .iter()
            .all(|b| (b.mean_error - 0.3).abs() < 1e-12 && b.samples == 6));
    }

    #[test]
    fn false_positive_counts() {
        let s = stream(&[(10, 0, Label::Signal), (20, 1, Label::Signal)]);
        let good = vec![TriggerRecord {
            time: 10,
            cells: vec![(1, 10, 1.0)],
        }];
        let fp = count_false_positives(&good, &s, 40, 0.5, 250, 500);
        assert_eq!(fp.total_over(0, 500), 0.0);
        let bad = vec![TriggerRecord {
            time: 10,
            cells: vec![(1, 10, 1.0), (3, 30, 0.9)],
        }];
        let fp = count_false_positives(&bad, &s, 40, 0.5, 250, 500);
        assert_eq!(fp.bins, vec![(0, 1.0), (250, 0.0)]);
        assert_eq!(fp.zero_point(0), Some(250));
        assert!(fp.to_csv("epst").starts_with("bin_start,count,algorithm\n0,1,epst\n"));
    }

    #[test]
    fn count_means() {
        let a = CountTrace {
            bin_width: 10,
            bins: vec![(0, 2.0), (10, 0.0)],
        };
        let b = CountTrace {
            bin_width: 10,
            bins: vec![(0, 4.0), (10, 1.0)],
        };
        assert_eq!(CountTrace::mean(&[a, b]).unwrap().bins, vec![(0, 3.0), (10, 0.5)]);
    }
}
