//! `pricewars`: simulate best-response price dynamics, search for pure
//! equilibria, estimate eventual welfare, and run the verification suites.
//!
//! Exit codes: 0 success, 1 a checked claim failed, 2 usage or input error.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "pricewars", version, about = "Best-response price competition on a money grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the dynamics and write a trace, a summary and plot data.
    Simulate(SimulateArgs),
    /// Enumerate pure Nash equilibria of a full-information instance.
    Nash(NashArgs),
    /// Estimate the eventual welfare guarantee over a schedule family.
    Ewg(EwgArgs),
    /// Run a named verification suite (or `all`).
    Verify(VerifyArgs),
    /// Write a named scenario to a file.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScheduleArg {
    RoundRobin,
    Alternating,
    ReverseIndex,
    Random,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    /// Override the scenario's scheduler.
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    /// Seller order for round-robin, comma separated (0-based).
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    /// Complete rounds to simulate.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Keep simulating after a cycle is found.
    #[arg(long)]
    pub full: bool,
    /// Seed for random schedules (PRICEWARS_SEED overrides).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace output, one JSON object per step.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Summary JSON output (stdout when omitted).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Plot CSV: t, mover, max_price_units, quantity, welfare_units.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NashArgs {
    pub scenario: PathBuf,
    /// Refuse profile spaces larger than this.
    #[arg(long, default_value_t = pricewars::equilibrium::DEFAULT_PROFILE_LIMIT)]
    pub limit: u128,
    /// Include a profitable deviation for every rejected profile.
    #[arg(long)]
    pub witnesses: bool,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct EwgArgs {
    pub scenario: PathBuf,
    /// Random schedules added to the round-robin family.
    #[arg(long, default_value_t = 4)]
    pub random: usize,
    /// Random initial profiles in addition to all-at-cap.
    #[arg(long, default_value_t = 4)]
    pub initials: usize,
    /// Rounds per run (defaults to the threshold plus ten).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include every run in the output.
    #[arg(long)]
    pub runs: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suite name or number, or `all`.
    pub suite: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// example3, lower-bound, theta-n, hetero-cycle, fact-3additive or fact-merged.
    pub name: String,
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Supplies for lower-bound, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub supplies: Option<Vec<usize>>,
    /// Total units for theta-n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Prior weight on the true valuation for theta-n, "num/den".
    #[arg(long)]
    pub delta: Option<String>,
    /// Sellers for hetero-cycle.
    #[arg(long)]
    pub sellers: Option<usize>,
    /// Value of the large item for hetero-cycle, in currency.
    #[arg(long)]
    pub value: Option<u64>,
    /// Decouple the grid from the seller count for hetero-cycle (1/ε).
    #[arg(long)]
    pub denom: Option<u64>,
}

/// Why a command stopped: a failed check or a bad input.
#[derive(Debug)]
pub enum Failure {
    Check(String),
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

/// `PRICEWARS_SEED`, when set, overrides any seed from flags or files.
pub fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("PRICEWARS_SEED") {
        Err(_) => Ok(None),
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(anyhow::anyhow!("PRICEWARS_SEED={s:?} is not an unsigned integer"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Nash(a) => commands::nash(a),
        Command::Ewg(a) => commands::ewg(a),
        Command::Verify(a) => commands::verify(a),
        Command::Gen(a) => commands::gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
