//! `vise`: expectations, optimal claims thresholds, simulation, sweeps, and
//! pit-of-losses maps for a society of egoists and one group.

mod commands;
mod error;
mod figures;
mod manifest;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vise_core::sweep::TMode;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "vise",
    version,
    about = "Voting in a stochastic environment: egoists plus one group with a claims threshold"
)]
#[command(after_help = "Exit codes: 0 success, 2 invalid input, 3 degenerate model, 4 I/O failure.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected one-step capital increments at a single parameter point
    Expect(ExpectArgs),
    /// Optimal group claims threshold t0
    OptimalT(OptimalArgs),
    /// Monte Carlo simulation of the voting process
    Simulate(SimulateArgs),
    /// Expectations over a one- or two-dimensional parameter grid
    Sweep(SweepArgs),
    /// Pit-of-losses map over (mu/sigma, delta)
    Pit(PitArgs),
    /// Data files for figure 1 to 8 from the bundled presets
    Figure(FigureArgs),
}

/// Society and environment. Exactly one of `--ell` and `--delta`.
#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("egoists").required(true).args(["ell", "delta"])))]
pub struct SocietyArgs {
    /// Society size n [members]
    #[arg(long)]
    pub n: u32,
    /// Number of egoists ell [members]
    #[arg(long)]
    pub ell: Option<u32>,
    /// Egoist share delta = ell/n [fraction in 0..1]; delta*n must be whole
    #[arg(long)]
    pub delta: Option<f64>,
    /// Majority threshold alpha [fraction of n]; a proposal passes with more than alpha*n yes votes
    #[arg(long)]
    pub alpha: f64,
    /// Mean mu of proposal increments [capital units]
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    /// Standard deviation sigma of proposal increments [capital units, > 0]
    #[arg(long)]
    pub sigma: f64,
}

/// Claims threshold: a value or the optimum.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct ThresholdArgs {
    /// Group claims threshold t [capital units]
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Use the optimal claims threshold t0 instead of --t
    #[arg(long)]
    pub t_opt: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Directory for data files and the run manifest
    #[arg(long, env = "VISE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Base name of the files written [default: the subcommand name]
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExpectArgs {
    #[command(flatten)]
    pub society: SocietyArgs,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OptimalArgs {
    #[command(flatten)]
    pub society: SocietyArgs,
    /// Also maximize numerically and check stationarity at t0
    #[arg(long)]
    pub numeric: bool,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub society: SocietyArgs,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Proposals per replication [steps]
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    /// Independent replications [count]
    #[arg(long, default_value_t = 4)]
    pub replications: u32,
    /// Master seed; replication r uses stream r of this seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the step-by-step record of replication 0 as CSV
    #[arg(long)]
    pub trajectory: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TModeArg {
    /// Use the given --t (sweep) or t = 0 (pit)
    Fixed,
    /// Use the optimal t0 at every grid point
    Optimal,
}

impl From<TModeArg> for TMode {
    fn from(m: TModeArg) -> Self {
        match m {
            TModeArg::Fixed => TMode::Fixed,
            TModeArg::Optimal => TMode::Optimal,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Society size n [members]
    #[arg(long)]
    pub n: u32,
    /// Standard deviation sigma [capital units, > 0]
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Fixed egoist share delta [fraction]; omit when sweeping delta
    #[arg(long)]
    pub delta: Option<f64>,
    /// Fixed majority threshold alpha [fraction]; omit when sweeping alpha
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed mean mu [capital units]; omit when sweeping mu_over_sigma
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Fixed claims threshold t [capital units]; fixed mode only
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Swept axis as KIND:LO:HI:STEP with KIND one of t_over_sigma, delta, alpha,
    /// mu_over_sigma (t and mu are scaled by sigma); give once or twice
    #[arg(long = "axis", required = true, allow_hyphen_values = true)]
    pub axes: Vec<String>,
    /// How t is chosen at each grid point
    #[arg(long, value_enum, default_value = "fixed")]
    pub t_mode: TModeArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PitArgs {
    /// Majority threshold alpha [fraction]
    #[arg(long)]
    pub alpha: f64,
    /// Society size n [members]; delta runs over k/n
    #[arg(long)]
    pub n: u32,
    /// fixed: t = 0; optimal: t = t0 at each cell
    #[arg(long, value_enum)]
    pub t_mode: TModeArg,
    /// Lowest mu/sigma [dimensionless]
    #[arg(long, allow_negative_numbers = true, default_value_t = -0.99)]
    pub mu_lo: f64,
    /// Highest mu/sigma [dimensionless]
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub mu_hi: f64,
    /// Spacing of the mu/sigma grid [dimensionless]
    #[arg(long, default_value_t = 0.01)]
    pub mu_step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure number
    #[arg(value_parser = clap::value_parser!(u8).range(1..=8))]
    pub id: u8,
    /// Override a preset value, e.g. --set sigma=2 or --set t.step=0.05
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    pub overrides: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Expect(a) => commands::expect(a),
        Command::OptimalT(a) => commands::optimal_t(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Pit(a) => commands::pit(a),
        Command::Figure(a) => figures::figure(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vise: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &CliError) -> u8 {
    e.exit_code() as u8
}
