//! Experiment configuration: a TOML file, command-line flags on top of it,
//! and dotted parameter overrides such as `--epst.matching_interval 5`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use epst::extensions::ExtensionParams;
use epst::runner::Algorithm;
use epst::scenario::Scenario;
use epst::EpstParams;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const DEFAULT_SEEDS: u64 = 25;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in scenario name or path to a scenario file.
    pub scenario: Option<String>,
    pub algorithms: Option<Vec<String>>,
    pub seeds: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dump_tree: bool,
    #[serde(default)]
    pub epst: toml::Table,
    #[serde(default)]
    pub extensions: toml::Table,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Everything needed to run, after merging and validation.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: Scenario,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub dump_tree: bool,
}

pub fn load_scenario(name: &str) -> Result<Scenario> {
    if name.ends_with(".toml") || Path::new(name).is_file() {
        Ok(Scenario::from_file(Path::new(name))?)
    } else {
        Ok(Scenario::builtin(name)?)
    }
}

/// Scalar written on the command line, typed the way TOML would type it.
fn scalar(text: &str) -> toml::Value {
    if let Ok(i) = text.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = text.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = text.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(text.to_string())
    }
}

/// Parses `key=value` pairs collected from dotted flags.
pub fn parse_pairs(pairs: &[String]) -> Result<toml::Table> {
    let mut table = toml::Table::new();
    for pair in pairs {
        let Some((key, value)) = pair.split_once('=') else {
            bail!("override {pair:?} has no value");
        };
        table.insert(key.to_string(), scalar(value));
    }
    Ok(table)
}

fn apply<T: Serialize + DeserializeOwned>(base: &T, overrides: &toml::Table, what: &str) -> Result<T> {
    if overrides.is_empty() {
        return Ok(toml::from_str(&toml::to_string(base)?)?);
    }
    let mut table = toml::Table::try_from(base)?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    table.try_into().with_context(|| format!("invalid {what} override"))
}

pub fn override_params(base: &EpstParams, overrides: &toml::Table) -> Result<EpstParams> {
    let p: EpstParams = apply(base, overrides, "epst")?;
    p.validate()?;
    Ok(p)
}

pub fn override_extensions(base: &ExtensionParams, overrides: &toml::Table) -> Result<ExtensionParams> {
    apply(base, overrides, "extensions")
}

/// Rewrites `--epst.key value` and `--epst.key=value` (likewise `--ext.`)
/// into `--epst key=value` so that clap can collect them.
pub fn expand_dotted(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter().peekable();
    while let Some(arg) = it.next() {
        let dotted = ["--epst.", "--ext."]
            .iter()
            .find_map(|p| arg.strip_prefix(p).map(|rest| (&p[..p.len() - 1], rest)));
        match dotted {
            Some((flag, rest)) if !rest.is_empty() => {
                let pair = if rest.contains('=') {
                    rest.to_string()
                } else {
                    match it.next_if(|next| !next.starts_with("--")) {
                        Some(value) => format!("{rest}={value}"),
                        None => rest.to_string(),
                    }
                };
                out.push(flag.to_string());
                out.push(pair);
            }
            _ => out.push(arg),
        }
    }
    out
}

/// Flag values, each overriding the config file when present.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub scenario: Option<String>,
    pub algorithms: Option<Vec<String>>,
    pub seeds: Option<u64>,
    pub out: Option<PathBuf>,
    pub dump_tree: bool,
    pub epst: Vec<String>,
    pub extensions: Vec<String>,
}

pub fn resolve(file: ExperimentConfig, flags: Flags) -> Result<Experiment> {
    let Some(name) = flags.scenario.or(file.scenario) else {
        bail!("no scenario given; pass --scenario or set it in the config file");
    };
    let mut scenario = load_scenario(&name)?;

    let mut epst = file.epst;
    epst.extend(parse_pairs(&flags.epst)?);
    scenario.epst = override_params(&scenario.epst, &epst)?;
    let mut ext = file.extensions;
    ext.extend(parse_pairs(&flags.extensions)?);
    scenario.extensions = override_extensions(&scenario.extensions, &ext)?;

    let names = flags
        .algorithms
        .or(file.algorithms)
        .unwrap_or_else(|| scenario.algorithms.clone());
    let algorithms = names
        .iter()
        .map(|a| a.trim().parse::<Algorithm>())
        .collect::<epst::Result<Vec<_>>>()?;
    if algorithms.is_empty() {
        bail!("no algorithms selected");
    }
    let seeds = flags.seeds.or(file.seeds).unwrap_or(DEFAULT_SEEDS);
    if seeds == 0 {
        bail!("seeds must be at least 1");
    }
    Ok(Experiment {
        scenario,
        algorithms,
        seeds: (0..seeds).collect(),
        out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        dump_tree: flags.dump_tree || file.dump_tree,
    })
}
