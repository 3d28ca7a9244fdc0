//! Declarative experiment scenarios. The built-in ones live in `scenarios/`
//! as TOML files; any file following the same schema can be loaded.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{
    add_random_events, add_structured_interference, apply_dropout, apply_jitter, gen_base_with, CycleConfig,
};
use crate::error::{Error, Result};
use crate::eval::{ScoringRule, DEFAULT_BIN_WIDTH};
use crate::event::{Delay, EventStream, Time};
use crate::extensions::ExtensionParams;
use crate::tree::EpstParams;

const BUILTIN: [(&str, &str); 7] = [
    ("structured_same", include_str!("../scenarios/structured_same.toml")),
    ("structured_diff", include_str!("../scenarios/structured_diff.toml")),
    ("structured_et0", include_str!("../scenarios/structured_et0.toml")),
    ("random_noise", include_str!("../scenarios/random_noise.toml")),
    ("jitter", include_str!("../scenarios/jitter.toml")),
    ("jitter_dropout", include_str!("../scenarios/jitter_dropout.toml")),
    ("structured_dense", include_str!("../scenarios/structured_dense.toml")),
];

pub const SCENARIO_NAMES: [&str; 7] = [
    "structured_same",
    "structured_diff",
    "structured_et0",
    "random_noise",
    "jitter",
    "jitter_dropout",
    "structured_dense",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringKind {
    Plain,
    Structured,
    RandomNoise,
    Dropout,
    Jitter,
    JitterDropout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceSpec {
    pub start: Time,
    pub end: Time,
    /// Regions sharing a pattern number share the overlay pattern.
    pub pattern: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterSpec {
    /// Index of the first jittered event.
    pub onset: usize,
    pub max_offset: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropoutSpec {
    pub p: f64,
    pub onset: Time,
}

fn default_bin_width() -> Time {
    DEFAULT_BIN_WIDTH
}

fn default_noise_rate() -> u64 {
    100
}

fn default_pad() -> Delay {
    4
}

fn default_algorithms() -> Vec<String> {
    ["epst", "pst", "ppmc"].map(String::from).to_vec()
}

fn default_interference_cycle() -> CycleConfig {
    CycleConfig::interference()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub duration: Time,
    pub scoring: ScoringKind,
    #[serde(default = "default_pad")]
    pub pad: Delay,
    #[serde(default = "default_bin_width")]
    pub bin_width: Time,
    /// Whether false-positive counts are reported.
    #[serde(default)]
    pub false_positives: bool,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub base: CycleConfig,
    #[serde(default = "default_interference_cycle")]
    pub interference_cycle: CycleConfig,
    #[serde(default)]
    pub interference: Vec<InterferenceSpec>,
    #[serde(default = "default_noise_rate")]
    pub noise_rate: u64,
    #[serde(default)]
    pub noise: Vec<NoiseSpec>,
    pub jitter: Option<JitterSpec>,
    pub dropout: Option<DropoutSpec>,
    #[serde(default)]
    pub epst: EpstParams,
    #[serde(default)]
    pub extensions: ExtensionParams,
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Scenario {
    pub fn builtin(name: &str) -> Result<Self> {
        let text = BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
        Self::parse(text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.epst.validate()?;
        let inside = |start: Time, end: Time| start < end && end <= self.duration;
        if !self.interference.iter().all(|i| inside(i.start, i.end))
            || !self.noise.iter().all(|n| inside(n.start, n.end))
        {
            return Err(Error::Config("intervals must lie within the simulation span".into()));
        }
        if self.bin_width == 0 {
            return Err(Error::Config("bin_width must be positive".into()));
        }
        if let Some(d) = self.dropout {
            if !(0.0..=1.0).contains(&d.p) {
                return Err(Error::Config("dropout p must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn rule(&self) -> ScoringRule {
        match self.scoring {
            ScoringKind::Plain => ScoringRule::Plain,
            ScoringKind::Structured => ScoringRule::Structured,
            ScoringKind::RandomNoise => ScoringRule::RandomNoise,
            ScoringKind::Dropout => ScoringRule::Dropout,
            ScoringKind::Jitter => ScoringRule::Jitter { pad: self.pad },
            ScoringKind::JitterDropout => ScoringRule::JitterDropout { pad: self.pad },
        }
    }

    /// Start of the first interference or noise region, if any.
    pub fn first_disturbance(&self) -> Option<Time> {
        let a = self.interference.iter().map(|i| i.start);
        let b = self.noise.iter().map(|n| n.start);
        a.chain(b).min()
    }

    /// Base signal with interference and noise, before any timing noise.
    fn additive(&self, seed: u64) -> EventStream {
        let mut s = gen_base_with(mix(seed, 1), usize::MAX, self.duration, &self.base);
        for i in &self.interference {
            s = add_structured_interference(
                &s,
                mix(seed, 100 + i.pattern),
                &[(i.start, i.end)],
                &self.interference_cycle,
            );
        }
        if !self.noise.is_empty() {
            let intervals: Vec<(Time, Time)> = self.noise.iter().map(|n| (n.start, n.end)).collect();
            s = add_random_events(&s, mix(seed, 2), &intervals, self.noise_rate);
        }
        s
    }

    /// Time of the first jittered event of the stream for `seed`.
    pub fn jitter_onset_time(&self, seed: u64) -> Option<Time> {
        let j = self.jitter?;
        self.additive(seed).events().get(j.onset).map(|e| e.time)
    }

    /// The labeled stream for one seed.
    pub fn generate(&self, seed: u64) -> EventStream {
        let mut s = self.additive(seed);
        if let Some(j) = self.jitter {
            s = apply_jitter(&s, mix(seed, 3), j.onset, j.max_offset);
        }
        if let Some(d) = self.dropout {
            s = apply_dropout(&s, mix(seed, 4), d.p, d.onset);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Label;

    #[test]
    fn builtins_parse() {
        for name in SCENARIO_NAMES {
            let s = Scenario::builtin(name).unwrap();
            assert_eq!(s.name, name);
        }
        assert!(matches!(Scenario::builtin("nope"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn et0_overrides_threshold() {
        let s = Scenario::builtin("structured_et0").unwrap();
        assert_eq!(s.epst.branch_extension_threshold, 0);
        assert_eq!(s.epst.history_window, 32);
        assert!(s.false_positives);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Scenario::parse("name = \"x\"\nduration = 10\nscoring = \"plain\"\nbogus = 1\n").is_err());
        let bad = "name = \"x\"\nduration = 100\nscoring = \"plain\"\n[[noise]]\nstart = 50\nend = 500\n";
        assert!(Scenario::parse(bad).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let s = Scenario::builtin("jitter_dropout").unwrap();
        assert_eq!(s.generate(3), s.generate(3));
        assert_ne!(s.generate(3), s.generate(4));
    }

    #[test]
    fn same_and_diff_patterns() {
        let same = Scenario::builtin("structured_same").unwrap().generate(5);
        let diff = Scenario::builtin("structured_diff").unwrap().generate(5);
        let overlay = |s: &EventStream, from: Time| -> Vec<(Time, u32)> {
            s.events()
                .iter()
                .filter(|e| e.label == Label::Interference && e.time >= from && e.time < from + 1000)
                .map(|e| (e.time - from, e.channel))
                .collect()
        };
        assert_eq!(overlay(&same, 5000), overlay(&same, 7000));
        assert_eq!(overlay(&same, 5000), overlay(&diff, 5000));
        assert_ne!(overlay(&diff, 5000), overlay(&diff, 7000));
    }

    #[test]
    fn jitter_onset_matches_event_index() {
        let s = Scenario::builtin("jitter").unwrap();
        let onset = s.jitter_onset_time(2).unwrap();
        let base = s.additive(2);
        assert_eq!(base.events()[500].time, onset);
        assert!((5000..6000).contains(&onset));
        assert_eq!(Scenario::builtin("structured_same").unwrap().jitter_onset_time(2), None);
    }

    #[test]
    fn noise_lands_in_its_intervals() {
        let s = Scenario::builtin("random_noise").unwrap().generate(1);
        let noise: Vec<Time> = s
            .events()
            .iter()
            .filter(|e| e.label == Label::Noise)
            .map(|e| e.time)
            .collect();
        assert_eq!(noise.len(), 200);
        assert!(noise
            .iter()
            .all(|&t| (7000..8000).contains(&t) || (9000..10000).contains(&t)));
    }
}
