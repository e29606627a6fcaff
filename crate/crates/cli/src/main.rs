//! `teamscale`: mine git histories and test team-size scaling.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 degenerate statistics.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use teamscale_core::{Measure, MethodSpec, Model};

#[derive(Debug, Parser)]
#[command(name = "teamscale", version, about = "Team-size vs productivity scaling from git histories")]
pub struct Cli {
    /// TOML run configuration; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory for CSV and SVG files (and mined records).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for per-project work.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract commit records from a repository or from every project of a manifest.
    Mine(MineArgs),
    /// Estimate scaling coefficients and cross-tabulate verdicts.
    Analyze(AnalyzeArgs),
    /// Re-estimate alpha3 over a grid of front-load days.
    Sweep(SweepArgs),
    /// Paired tests: p-value filter on/off and first period dropped.
    Compare(CompareArgs),
    /// Histograms and superlinearity summary from analyze output.
    Report,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Repository path or clone URL.
    #[arg(required_unless_present = "manifest", conflicts_with = "manifest")]
    pub locator: Option<String>,
    /// Last day (UTC, inclusive) of commits to keep.
    #[arg(long, value_name = "YYYY-MM-DD", required_unless_present = "manifest")]
    pub cutoff: Option<NaiveDate>,
    /// Record file; defaults to `<out>/<project>.jsonl`.
    #[arg(long, short = 'o', value_name = "FILE", conflicts_with = "manifest")]
    pub output: Option<PathBuf>,
    /// Mine every project of this manifest, each up to its end date.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Directory for the manifest's record files; defaults to the configured records directory.
    #[arg(long, value_name = "DIR", requires = "manifest")]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset manifest (repeatable); replaces the configured list.
    #[arg(long = "manifest", value_name = "FILE")]
    pub manifests: Vec<PathBuf>,
    /// Directory holding `<project>.jsonl` record files.
    #[arg(long, value_name = "DIR")]
    pub records: Option<PathBuf>,
    /// Output measure for every analysis.
    #[arg(long)]
    pub measure: Option<Measure>,
    /// Drop one-time contributors (sweep and compare).
    #[arg(long)]
    pub no_one_timers: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Analysis spec such as `sornette:p=0.01` or `scholtes:loglin:fl=330` (repeatable).
    #[arg(long = "method", value_name = "SPEC")]
    pub methods: Vec<MethodSpec>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated front-load days, ascending.
    #[arg(long, value_delimiter = ',', value_name = "DAYS")]
    pub grid: Vec<u32>,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    /// Per-tail fraction of commits trimmed by edit distance.
    #[arg(long, value_name = "FRACTION")]
    pub trim: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Significance filter of the filtered setting.
    #[arg(long, value_name = "P")]
    pub p_threshold: Option<f64>,
}

fn parse_model(s: &str) -> Result<Model, String> {
    match s {
        "loglog" => Ok(Model::LogLog),
        "loglin" => Ok(Model::LogLin),
        _ => Err(format!("expected loglog or loglin, got `{s}`")),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let degenerate = err
        .chain()
        .filter_map(|c| c.downcast_ref::<teamscale_core::Error>())
        .any(|e| e.is_degenerate());
    if degenerate {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
