//! Seeded benchmark streams: a cyclic base signal and the noise operations
//! layered on top of it. Every generator is a pure function of its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::event::{Channel, Delay, Event, EventStream, Label, Time};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleConfig {
    pub num_channels: u32,
    pub cycle_length: usize,
    pub delay_min: Delay,
    pub delay_max: Delay,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            num_channels: 30,
            cycle_length: 60,
            delay_min: 8,
            delay_max: 14,
        }
    }
}

impl CycleConfig {
    pub fn interference() -> Self {
        Self {
            cycle_length: 20,
            ..Self::default()
        }
    }
}

/// One cycle as `(channel, delay before the event)` pairs.
pub fn gen_cycle(seed: u64, cfg: &CycleConfig) -> Vec<(Channel, Delay)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cfg.cycle_length)
        .map(|_| {
            let channel = rng.gen_range(0..cfg.num_channels);
            let delay = rng.gen_range(cfg.delay_min..=cfg.delay_max);
            (channel, delay)
        })
        .collect()
}

/// Events of `cycle` repeated from `start`, the first one a delay after it,
/// while the count stays below `max_events` and times stay below `end`.
fn repeat_cycle(cycle: &[(Channel, Delay)], start: Time, end: Time, max_events: usize, label: Label) -> Vec<Event> {
    let mut out = Vec::new();
    let mut t = start;
    for &(channel, delay) in cycle.iter().cycle().take(max_events) {
        t += delay as Time;
        if t >= end {
            break;
        }
        out.push(Event::with_label(t, channel, label));
    }
    out
}

/// `total_events` signal events repeating one seeded cycle verbatim.
pub fn gen_base(seed: u64, total_events: usize) -> EventStream {
    gen_base_with(seed, total_events, Time::MAX, &CycleConfig::default())
}

/// Base signal limited by event count and by end time.
pub fn gen_base_with(seed: u64, total_events: usize, end: Time, cfg: &CycleConfig) -> EventStream {
    let cycle = gen_cycle(seed, cfg);
    let events = repeat_cycle(&cycle, 0, end, total_events, Label::Signal);
    EventStream::new(events, cfg.num_channels).expect("generated channels are in range")
}

/// Overlays an independent cycle, restarted at the start of every interval.
pub fn add_structured_interference(
    stream: &EventStream,
    pattern_seed: u64,
    intervals: &[(Time, Time)],
    cfg: &CycleConfig,
) -> EventStream {
    let cycle = gen_cycle(pattern_seed, cfg);
    let mut events = stream.events().to_vec();
    for &(start, end) in intervals {
        events.extend(repeat_cycle(&cycle, start, end, usize::MAX, Label::Interference));
    }
    EventStream::new(events, stream.num_channels().max(cfg.num_channels)).expect("channels in range")
}

/// `rate` noise events per 1000 steps with uniform times and channels in each
/// interval.
pub fn add_random_events(stream: &EventStream, seed: u64, intervals: &[(Time, Time)], rate: u64) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = stream.events().to_vec();
    let channels = stream.num_channels();
    for &(start, end) in intervals {
        if end <= start {
            continue;
        }
        let count = rate * (end - start) / 1000;
        for _ in 0..count {
            let t = rng.gen_range(start..end);
            events.push(Event::with_label(t, rng.gen_range(0..channels), Label::Noise));
        }
    }
    EventStream::new(events, channels).expect("channels in range")
}

/// Shifts every signal or interference event at index `onset` or later by a
/// uniform offset in `[-max_offset, max_offset]`, clamped at time 0.
pub fn apply_jitter(stream: &EventStream, seed: u64, onset: usize, max_offset: i64) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = stream
        .events()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if i >= onset && matches!(e.label, Label::Signal | Label::Interference) {
                let offset = rng.gen_range(-max_offset..=max_offset);
                Event {
                    time: (e.time as i64 + offset).max(0) as Time,
                    ..*e
                }
            } else {
                *e
            }
        })
        .collect();
    EventStream::new(events, stream.num_channels()).expect("channels in range")
}

/// Relabels each signal event at or after `onset_time` as dropped with
/// probability `p`. Dropped events stay in the stream for scoring.
pub fn apply_dropout(stream: &EventStream, seed: u64, p: f64, onset_time: Time) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = p.clamp(0.0, 1.0);
    let events = stream
        .events()
        .iter()
        .map(|e| {
            if e.time >= onset_time && e.label == Label::Signal && rng.gen_bool(p) {
                Event {
                    label: Label::Dropped,
                    ..*e
                }
            } else {
                *e
            }
        })
        .collect();
    EventStream::new(events, stream.num_channels()).expect("channels in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delays(events: &[Event]) -> Vec<Time> {
        let mut prev = 0;
        events
            .iter()
            .map(|e| {
                let d = e.time - prev;
                prev = e.time;
                d
            })
            .collect()
    }

    #[test]
    fn base_is_cyclic() {
        let s = gen_base(11, 200);
        let ev = s.events();
        assert_eq!(ev.len(), 200);
        let d = delays(ev);
        for k in 0..140 {
            assert_eq!(ev[k + 60].channel, ev[k].channel);
            assert_eq!(d[k + 60], d[k]);
        }
        assert!(d.iter().all(|d| (8..=14).contains(d)));
        assert!(ev.iter().all(|e| e.label == Label::Signal));
    }

    #[test]
    fn base_is_deterministic() {
        assert_eq!(gen_base(5, 300), gen_base(5, 300));
        assert_ne!(gen_base(5, 300), gen_base(6, 300));
    }

    #[test]
    fn base_respects_end_time() {
        let s = gen_base_with(1, usize::MAX, 1000, &CycleConfig::default());
        assert!(s.end_time() < 1000);
        assert!(s.len() > 60);
    }

    #[test]
    fn interference_stays_inside_intervals() {
        let base = gen_base(2, 400);
        let cfg = CycleConfig::interference();
        let s = add_structured_interference(&base, 9, &[(1000, 2000)], &cfg);
        let inter: Vec<Event> = s
            .events()
            .iter()
            .filter(|e| e.label == Label::Interference)
            .copied()
            .collect();
        assert!(!inter.is_empty());
        assert!(inter.iter().all(|e| (1000..2000).contains(&e.time)));
        assert_eq!(s.events().iter().filter(|e| e.label == Label::Signal).count(), 400);
        // periodic with the 20-event cycle
        let d = delays(&inter);
        for k in 1..inter.len() - 20 {
            assert_eq!(inter[k + 20].channel, inter[k].channel);
            assert_eq!(d[k + 20], d[k]);
        }
    }

    #[test]
    fn interference_seed_controls_pattern() {
        let base = EventStream::empty(30);
        let cfg = CycleConfig::interference();
        let same = add_structured_interference(&base, 4, &[(0, 500), (1000, 1500)], &cfg);
        let first: Vec<(Time, Channel)> = same
            .events()
            .iter()
            .filter(|e| e.time < 500)
            .map(|e| (e.time, e.channel))
            .collect();
        let second: Vec<(Time, Channel)> = same
            .events()
            .iter()
            .filter(|e| e.time >= 1000)
            .map(|e| (e.time - 1000, e.channel))
            .collect();
        assert_eq!(first, second);
        let other = add_structured_interference(&base, 5, &[(0, 500)], &cfg);
        assert_ne!(other.events(), &same.events()[..first.len()]);
    }

    #[test]
    fn random_events_per_interval() {
        let base = gen_base(3, 100);
        let s = add_random_events(&base, 8, &[(0, 1000), (2000, 3000)], 100);
        let noise: Vec<&Event> = s.events().iter().filter(|e| e.label == Label::Noise).collect();
        assert_eq!(noise.len(), 200);
        assert_eq!(noise.iter().filter(|e| e.time < 1000).count(), 100);
        assert_eq!(add_random_events(&base, 8, &[], 100), base);
    }

    #[test]
    fn random_channels_roughly_uniform() {
        let mut hist = [0u64; 30];
        for seed in 0..60 {
            let s = add_random_events(&EventStream::empty(30), seed, &[(0, 1000)], 100);
            for e in s.events() {
                hist[e.channel as usize] += 1;
            }
        }
        let expect = 6000.0 / 30.0;
        let chi2: f64 = hist.iter().map(|&h| (h as f64 - expect).powi(2) / expect).sum();
        // 29 degrees of freedom, 99.9th percentile is about 58.3
        assert!(chi2 < 58.3, "chi2 = {chi2}");
    }

    #[test]
    fn jitter_offsets_bounded() {
        let base = gen_base(4, 1000);
        let j = apply_jitter(&base, 1, 500, 4);
        assert_eq!(apply_jitter(&base, 1, 5000, 4), base);
        assert_eq!(j.len(), 1000);
        assert_eq!(&base.events()[..500], &j.events()[..500]);
        let changed = (0..50u64).any(|seed| {
            let j = apply_jitter(&base, seed, 500, 4);
            crate::vmm::symbolize(&j) != crate::vmm::symbolize(&base)
        });
        assert!(changed);
    }

    #[test]
    fn jitter_per_event_offsets() {
        // events 20 steps apart cannot reorder, so offsets can be read back
        let events: Vec<Event> = (1..=50).map(|k| Event::new(k * 20, 0)).collect();
        let s = EventStream::new(events, 1).unwrap();
        let j = apply_jitter(&s, 3, 10, 4);
        for (a, b) in s.events().iter().zip(j.events()) {
            let off = b.time as i64 - a.time as i64;
            assert!((-4..=4).contains(&off));
        }
        assert_eq!(&s.events()[..10], &j.events()[..10]);
    }

    #[test]
    fn dropout_fraction() {
        let base = gen_base(6, 6000);
        assert_eq!(apply_dropout(&base, 1, 0.0, 0), base);
        let all = apply_dropout(&base, 1, 1.0, 1000);
        assert!(all
            .events()
            .iter()
            .all(|e| (e.time >= 1000) == (e.label == Label::Dropped)));
        let d = apply_dropout(&base, 1, 0.2, 0);
        let n = d
            .events()
            .iter()
            .take(5000)
            .filter(|e| e.label == Label::Dropped)
            .count();
        let frac = n as f64 / 5000.0;
        assert!((frac - 0.2).abs() <= 0.02, "{frac}");
    }
}
