//! `lwc`: sampling, checking, entropy, realization and counting for
//! marked neighborhood distributions.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Exit code for malformed or invalid input.
const EXIT_INPUT: u8 = 2;
/// Exit code for exhausted resource caps.
const EXIT_RESOURCE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "lwc", version, about = "Marked unimodular Galton-Watson trees and graph realizations")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Arithmetic for probabilities; `auto` picks rational unless the support is very large.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Auto,
    Rational,
    Float,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw UGWT samples (or colored UGWT samples) as JSON lines.
    Sample(SampleArgs),
    /// Admissibility, Markov consistency and involution checks.
    Check(CheckArgs),
    /// The entropy functional J_h, optionally along the extension ladder.
    Entropy(EntropyArgs),
    /// Realize a graph whose neighborhood law approximates a distribution.
    Realize(RealizeArgs),
    /// TV profile of realized graphs against the target over a size schedule.
    Converge(ConvergeArgs),
    /// log N_h(G) and the size of the matching mark-count ensemble.
    Count(CountArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// Distribution file.
    #[arg(long, required_unless_present = "colored_law", conflicts_with = "colored_law")]
    pub dist: Option<PathBuf>,
    /// Colored degree law file; samples the colored tree instead.
    #[arg(long)]
    pub colored_law: Option<PathBuf>,
    /// Expected depth of the distribution; checked against the file.
    #[arg(long)]
    pub h: Option<u32>,
    /// Depth to grow each sample to.
    #[arg(long)]
    pub depth: u32,
    /// Number of samples.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Output file (default: <out-dir>/samples.jsonl).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Verify the Markov identity of the exact extension.
    #[arg(long)]
    pub consistency: bool,
    /// Run the involution-invariance check with this many samples.
    #[arg(long)]
    pub unimodularity: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Number of rungs J_h, J_{h+1}, ... to evaluate via exact extension.
    #[arg(long, default_value_t = 1)]
    pub ladder: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct RealizeArgs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Number of vertices.
    #[arg(long)]
    pub n: usize,
    /// Expected depth of the distribution; checked against the file.
    #[arg(long)]
    pub h: Option<u32>,
    /// Graph output (default: <out-dir>/graph.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plan output (default: <out-dir>/plan.json).
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Rejection sampling cap.
    #[arg(long, default_value_t = lwc_core::colored::DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Graph sizes.
    #[arg(long, value_delimiter = ',', default_value = "200,800,3200")]
    pub schedule: Vec<usize>,
    /// UGWT samples for the depth h+1 reference law.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = lwc_core::colored::DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: u64,
    /// CSV output (default: <out-dir>/converge.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Exact,
    Estimate,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    /// Graph file (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub h: u32,
    #[arg(long, value_enum, default_value_t = CountMethod::Exact)]
    pub method: CountMethod,
    /// Configurations drawn to estimate the acceptance fraction.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<lwc_core::Error>() {
        Some(e) if e.is_resource() => EXIT_RESOURCE,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
