//! Online driving of the algorithms over a labeled stream.
//!
//! Events are consumed strictly in time order. For every distinct observed
//! time the EPST units first settle the outcome of earlier predictions,
//! then predict once from the model learned so far, then learn the new
//! events.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{
    aggregate_runs, count_false_positives, score_epst, score_vmm, CountTrace, ErrorTrace, ScoredEvent, Timeline,
    TriggerRecord,
};
use crate::event::{window_from_events, Event, EventStream, Time};
use crate::extensions::{
    inhibitory_maintenance, matched_inhibitory, prune_entropy, record_false_positive, ExtensionParams, Variant,
};
use crate::infer::{predict_with, sampled_predict_with, PredictOptions, PredictionMatrix};
use crate::scenario::Scenario;
use crate::tree::{EpstParams, EpstTree};
use crate::vmm::{VmmKind, VmmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Epst(Variant),
    Vmm(VmmKind),
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Epst(v) => v.as_str(),
            Algorithm::Vmm(k) => k.as_str(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Variant>()
            .map(Algorithm::Epst)
            .or_else(|_| s.parse::<VmmKind>().map(Algorithm::Vmm))
            .map_err(|_| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Prediction strategy used at every trigger.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Sampling {
    #[default]
    Full,
    /// Downsample the known events to `size`, `repeats` times, and keep the
    /// cell-wise maximum.
    Sampled { size: usize, repeats: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub sampling: Sampling,
    pub predict: PredictOptions,
    /// Seed for sampled prediction.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct EpstRun {
    pub triggers: Vec<TriggerRecord>,
    pub trees: Vec<EpstTree>,
    /// False positives that created inhibitory records.
    pub inhibition_events: u64,
    /// Wall time spent in prediction calls.
    pub predict_time: std::time::Duration,
}

fn record(m: &PredictionMatrix) -> TriggerRecord {
    TriggerRecord {
        time: m.trigger_time,
        cells: m.nonzero().map(|(c, n, p)| (c, n as u16, p)).collect(),
    }
}

/// Runs one EPST variant online over the observed events of `stream`, with
/// one unit per channel.
pub fn run_epst(
    stream: &EventStream,
    params: &EpstParams,
    ext: &ExtensionParams,
    variant: Variant,
    options: RunOptions,
) -> Result<EpstRun> {
    let channels = stream.num_channels();
    let mut trees: Vec<EpstTree> = (0..channels)
        .map(|g| EpstTree::new(g, params.clone()))
        .collect::<Result<_>>()?;
    let observed: Vec<Event> = stream.observed().copied().collect();
    let m = params.history_window;
    let width = params.prediction_window;
    let horizon = stream.end_time() + width as Time + 2;
    let mut live = Timeline::new(channels, horizon, width);
    let mut triggers = Vec::new();
    let mut inhibition_events = 0;
    let mut predict_time = std::time::Duration::ZERO;
    let mut received: u64 = 0;
    let mut last: Option<Time> = None;

    let mut i = 0;
    while i < observed.len() {
        let t = observed[i].time;
        let j = i + observed[i..].partition_point(|e| e.time == t);
        let now = &observed[i..j];

        if variant.inhibition() {
            let from = last.map_or(0, |l| l + 1);
            for tp in from..=t {
                for g in 0..channels {
                    if live.get(g, tp) < ext.decision_threshold {
                        continue;
                    }
                    let fired = tp == t && now.iter().any(|e| e.channel == g);
                    if !fired {
                        let w = window_from_events(&observed, tp, m);
                        if record_false_positive(&mut trees[g as usize], &w) > 0 {
                            inhibition_events += 1;
                        }
                    }
                }
            }
        }

        let w = window_from_events(&observed, t, m);
        if variant.inhibition() {
            for e in now {
                let tree = &mut trees[e.channel as usize];
                let matched = matched_inhibitory(tree, &w);
                if !matched.is_empty() {
                    inhibitory_maintenance(tree, true, &matched, ext.joint_threshold, ext.fn_threshold);
                }
            }
        }

        let started = std::time::Instant::now();
        let matrix = match options.sampling {
            Sampling::Full => predict_with(&trees, &observed[..j], t, options.predict),
            Sampling::Sampled { size, repeats } => {
                sampled_predict_with(&trees, &observed[..j], t, size, repeats, options.seed ^ t)
            }
        };
        predict_time += started.elapsed();
        let rec = record(&matrix);
        live.apply(&rec);
        triggers.push(rec);

        for e in now {
            for tree in trees.iter_mut() {
                tree.step1_denominators(e.channel, t, &w);
            }
            trees[e.channel as usize].step2_numerators_and_extend(t, &w);
            received += 1;
            if variant.pruning() && received.is_multiple_of(ext.prune_interval.max(1)) {
                for tree in trees.iter_mut() {
                    prune_entropy(tree, ext.prune_entropy_threshold, ext.prune_epsilon);
                }
            }
        }

        last = Some(t);
        i = j;
    }
    Ok(EpstRun {
        triggers,
        trees,
        inhibition_events,
        predict_time,
    })
}

/// Next-symbol probability of every stream event's channel from the model
/// state before the event. Dropped events are scored but not learned.
pub fn run_vmm(stream: &EventStream, kind: VmmKind) -> Vec<Option<f64>> {
    let mut model = VmmModel::new(kind, stream.num_channels());
    stream
        .events()
        .iter()
        .map(|e| {
            let p = model.next_probability(e.channel);
            if e.is_observed() {
                model.update(e.channel);
            }
            p
        })
        .collect()
}

/// Outcome of one algorithm on one seed.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub scores: Vec<ScoredEvent>,
    pub false_positives: Option<CountTrace>,
    pub run: Option<EpstRun>,
}

pub fn run_seed(
    scenario: &Scenario,
    algorithm: Algorithm,
    seed: u64,
    params: &EpstParams,
    options: RunOptions,
) -> Result<SeedResult> {
    let stream = scenario.generate(seed);
    let rule = scenario.rule();
    match algorithm {
        Algorithm::Vmm(kind) => {
            let probs = run_vmm(&stream, kind);
            Ok(SeedResult {
                scores: score_vmm(&probs, &stream, rule),
                false_positives: None,
                run: None,
            })
        }
        Algorithm::Epst(variant) => {
            let run = run_epst(&stream, params, &scenario.extensions, variant, options)?;
            let width = params.prediction_window;
            let scores = score_epst(&run.triggers, &stream, width, rule);
            let fp = scenario.false_positives.then(|| {
                count_false_positives(
                    &run.triggers,
                    &stream,
                    width,
                    scenario.extensions.decision_threshold,
                    scenario.bin_width,
                    scenario.duration,
                )
            });
            Ok(SeedResult {
                scores,
                false_positives: fp,
                run: Some(run),
            })
        }
    }
}

/// Seed-averaged outcome of one algorithm on a scenario.
#[derive(Debug, Clone)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    /// All scored events together.
    pub trace: ErrorTrace,
    /// One trace per scoring group.
    pub groups: Vec<(&'static str, ErrorTrace)>,
    pub false_positives: Option<CountTrace>,
    /// Final trees of the last seed, for inspection.
    pub last_trees: Option<Vec<EpstTree>>,
    pub predict_time: std::time::Duration,
}

/// Runs one algorithm on every seed, in parallel, keeping seed order.
pub fn run_seeds(
    scenario: &Scenario,
    algorithm: Algorithm,
    seeds: &[u64],
    params: &EpstParams,
    options: RunOptions,
) -> Result<Vec<SeedResult>> {
    seeds
        .par_iter()
        .map(|&seed| run_seed(scenario, algorithm, seed, params, options))
        .collect()
}

pub fn run_algorithm(
    scenario: &Scenario,
    algorithm: Algorithm,
    seeds: &[u64],
    params: &EpstParams,
    options: RunOptions,
) -> Result<AlgorithmResult> {
    let results = run_seeds(scenario, algorithm, seeds, params, options)?;
    summarize(scenario, algorithm, results)
}

/// Seed-averaged traces of finished runs.
pub fn summarize(scenario: &Scenario, algorithm: Algorithm, results: Vec<SeedResult>) -> Result<AlgorithmResult> {
    let groups = scenario.rule().groups();
    let (bw, span) = (scenario.bin_width, scenario.duration);
    let combined: Vec<ErrorTrace> = results
        .iter()
        .map(|r| ErrorTrace::from_scores(&r.scores, None, bw, span))
        .collect();
    let per_group: Vec<(&'static str, ErrorTrace)> = groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let traces: Vec<ErrorTrace> = results
                .iter()
                .map(|r| ErrorTrace::from_scores(&r.scores, Some(gi), bw, span))
                .collect();
            aggregate_runs(&traces).map(|t| (g.name, t))
        })
        .collect::<Result<_>>()?;
    let fps: Vec<CountTrace> = results.iter().filter_map(|r| r.false_positives.clone()).collect();
    let predict_time = results
        .iter()
        .filter_map(|r| r.run.as_ref())
        .map(|r| r.predict_time)
        .sum();
    let last_trees = results.into_iter().last().and_then(|r| r.run).map(|r| r.trees);
    Ok(AlgorithmResult {
        algorithm,
        trace: aggregate_runs(&combined)?,
        groups: per_group,
        false_positives: if fps.is_empty() {
            None
        } else {
            Some(CountTrace::mean(&fps)?)
        },
        last_trees,
        predict_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Label;

    #[test]
    fn algorithm_names() {
        for name in ["epst", "epst_i", "epst_p", "epst_ip", "pst", "ppmc"] {
            assert_eq!(name.parse::<Algorithm>().unwrap().as_str(), name);
        }
        assert!(matches!("lstm".parse::<Algorithm>(), Err(Error::UnknownAlgorithm(_))));
    }

    #[test]
    fn one_trigger_per_distinct_time() {
        let s = EventStream::new(vec![Event::new(10, 0), Event::new(10, 1), Event::new(20, 0)], 2).unwrap();
        let run = run_epst(
            &s,
            &EpstParams::default(),
            &ExtensionParams::default(),
            Variant::Epst,
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(run.triggers.iter().map(|t| t.time).collect::<Vec<_>>(), vec![10, 20]);
        assert_eq!(run.trees.len(), 2);
        assert_eq!(run.trees[0].root_count(), 2);
    }

    #[test]
    fn dropped_events_are_invisible() {
        let events = vec![
            Event::new(10, 0),
            Event::with_label(20, 1, Label::Dropped),
            Event::new(30, 0),
        ];
        let s = EventStream::new(events, 2).unwrap();
        let run = run_epst(
            &s,
            &EpstParams::default(),
            &ExtensionParams::default(),
            Variant::Epst,
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(run.trees[1].root_count(), 0);
        assert_eq!(run.triggers.len(), 2);
        let probs = run_vmm(&s, VmmKind::Ppmc);
        assert_eq!(probs.len(), 3);
        assert_eq!(probs[0], Some(0.5));
    }

    #[test]
    fn learns_the_base_cycle() {
        let scenario = Scenario::parse("name = \"t\"\nduration = 3000\nscoring = \"plain\"\n").unwrap();
        let r = run_algorithm(
            &scenario,
            Algorithm::Epst(Variant::Epst),
            &[1],
            &scenario.epst,
            RunOptions::default(),
        )
        .unwrap();
        let late = r.trace.mean_over(2000, 3000).unwrap();
        assert!(late < 0.1, "late error {late}");
    }
}
