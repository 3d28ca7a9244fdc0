//! Command-line runner for the benchmark scenarios and the acceptance checks.

mod config;
mod output;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use epst::runner::{run_algorithm, Algorithm, AlgorithmResult, RunOptions, Sampling};
use epst::scenario::SCENARIO_NAMES;
use epst::verify::{self, Mode, CRITERIA};

use config::{ExperimentConfig, Flags};

#[derive(Parser, Debug)]
#[command(name = "epst", version, about = "Event-based prediction suffix tree experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run algorithms over seeds and write traces and charts.
    Run(RunArgs),
    /// Run the acceptance checks and print a pass/fail table.
    Verify {
        /// Fewer seeds with the looser bounds printed in the output.
        #[arg(long)]
        quick: bool,
        /// Criterion numbers to run, comma separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// List the built-in scenarios.
    List,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Built-in scenario name or a scenario TOML file.
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated algorithms, e.g. epst,epst_i,pst,ppmc.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    /// Number of seeds, starting at 0 [default: 25].
    #[arg(long)]
    seeds: Option<u64>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Also write the final trees of the last seed.
    #[arg(long)]
    dump_tree: bool,
    /// Experiment file with the same keys as the flags.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Sampled prediction with K known events and R repeats.
    #[arg(long, value_name = "K,R")]
    sampled: Option<String>,
    /// Tree parameter override, written as --epst.<name> <value>.
    #[arg(long = "epst", value_name = "NAME=VALUE", hide = true)]
    epst: Vec<String>,
    /// Extension parameter override, written as --ext.<name> <value>.
    #[arg(long = "ext", value_name = "NAME=VALUE", hide = true)]
    ext: Vec<String>,
}

fn parse_sampling(text: Option<&str>) -> Result<Sampling> {
    let Some(text) = text else { return Ok(Sampling::Full) };
    let parsed = text
        .split_once(',')
        .and_then(|(k, r)| Some((k.trim().parse().ok()?, r.trim().parse().ok()?)));
    match parsed {
        Some((size, repeats)) if size > 0 && repeats > 0 => Ok(Sampling::Sampled { size, repeats }),
        _ => bail!("--sampled expects two positive integers K,R, got {text:?}"),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let flags = Flags {
        scenario: args.scenario,
        algorithms: args.algos,
        seeds: args.seeds,
        out: args.out,
        dump_tree: args.dump_tree,
        epst: args.epst,
        extensions: args.ext,
    };
    let exp = config::resolve(file, flags)?;
    let options = RunOptions {
        sampling: parse_sampling(args.sampled.as_deref())?,
        ..RunOptions::default()
    };
    std::fs::create_dir_all(&exp.out).with_context(|| format!("creating {}", exp.out.display()))?;

    let s = &exp.scenario;
    let mut results: Vec<(Algorithm, AlgorithmResult)> = Vec::new();
    for &algo in &exp.algorithms {
        let r = run_algorithm(s, algo, &exp.seeds, &s.epst, options)?;
        let mean = r.trace.mean_over(0, s.duration).unwrap_or(f64::NAN);
        println!("{} {algo}: {} seeds, mean error {mean:.4}", s.name, exp.seeds.len());
        write(
            &exp.out,
            &format!("trace_{}_{algo}.csv", s.name),
            &output::trace_csv(&r),
        )?;
        if let Some(fp) = &r.false_positives {
            write(
                &exp.out,
                &format!("fp_{}_{algo}.csv", s.name),
                &fp.to_csv(algo.as_str()),
            )?;
        }
        if exp.dump_tree {
            if let Some(trees) = &r.last_trees {
                let dump: String = trees.iter().map(|t| t.snapshot()).collect::<Vec<_>>().join("\n");
                write(&exp.out, &format!("tree_{}_{algo}.txt", s.name), &dump)?;
            }
        }
        results.push((algo, r));
    }
    let series: Vec<(String, &epst::eval::ErrorTrace)> =
        results.iter().map(|(a, r)| (a.to_string(), &r.trace)).collect();
    write(
        &exp.out,
        &format!("chart_{}.svg", s.name),
        &output::line_chart(&s.name, &series),
    )?;
    Ok(())
}

fn verify(quick: bool, only: Vec<u8>) -> Result<bool> {
    let mode = if quick { Mode::Quick } else { Mode::Full };
    let ids = if only.is_empty() { CRITERIA.to_vec() } else { only };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.contains(id)) {
        bail!("no criterion {bad}; criteria are 1 to {}", CRITERIA.len());
    }
    println!("{}", verify::header(mode));
    let mut failed = 0;
    for &id in &ids {
        let report = verify::run_criterion(id, mode)?;
        println!("{report}");
        if !report.passed() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", ids.len() - failed, ids.len());
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(config::expand_dotted(std::env::args())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args).map(|()| true),
        Command::Verify { quick, only } => verify(quick, only),
        Command::List => {
            SCENARIO_NAMES.iter().for_each(|n| println!("{n}"));
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
