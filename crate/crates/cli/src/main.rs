use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eprb_core::contextuality::PreparationMode;
use eprb_core::models::ConditioningMode;
use eprb_core::tolerance;
use eprb_core::Outcome;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "eprb", version, about = "EPRB spin-experiment verification workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run measurement steps I-III on the singlet, optionally against a model.
    Pipeline(PipelineArgs),
    /// Classify hidden-variable models.
    Check(CheckArgs),
    /// Evaluate the CHSH combination at fixed angles or over a scan.
    Chsh(ChshArgs),
    /// Operator identities and value-assignment enumerations.
    Ks(KsArgs),
    /// Sweep the relative angle and emit singlet and model curves.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Conditioning {
    Bayes,
    Frozen,
    Both,
}

impl Conditioning {
    fn modes(self) -> Vec<ConditioningMode> {
        match self {
            Conditioning::Bayes => vec![ConditioningMode::Bayes],
            Conditioning::Frozen => vec![ConditioningMode::Frozen],
            Conditioning::Both => ConditioningMode::BOTH.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Seed for every seeded generator.
    #[arg(long, default_value_t = tolerance::DEFAULT_SEED)]
    seed: u64,
    /// Monte Carlo samples for sphere-valued models.
    #[arg(long, default_value_t = tolerance::DEFAULT_SAMPLES as u64, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Absolute tolerance for exact claims.
    #[arg(long = "tol")]
    tolerance: Option<f64>,
    /// Monte Carlo acceptance band in standard errors.
    #[arg(long)]
    sigma: Option<f64>,
    /// Square settings grid START:STOP:STEP in degrees.
    #[arg(long, default_value = "0:180:15")]
    grid: String,
    /// Shorthand for the grid step, keeping START and STOP.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report path; `-` writes the report to stdout instead of the summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct PipelineArgs {
    /// Setting a in degrees.
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    /// Setting b in degrees.
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Registered outcome A' (+1 or -1); sampled when absent.
    #[arg(long, allow_negative_numbers = true)]
    outcome_a: Option<Outcome>,
    /// Registered outcome B' (+1 or -1); sampled when absent.
    #[arg(long, allow_negative_numbers = true)]
    outcome_b: Option<Outcome>,
    /// Zoo model to run against the quantum steps.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, conflicts_with = "model")]
    model_file: Option<PathBuf>,
    #[arg(long, alias = "mode", value_enum, default_value_t = Conditioning::Both)]
    conditioning: Conditioning,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
struct CheckArgs {
    /// Zoo model name; repeatable.
    #[arg(long)]
    model: Vec<String>,
    /// Table model file; repeatable.
    #[arg(long)]
    model_file: Vec<PathBuf>,
    /// Every zoo model.
    #[arg(long)]
    all: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
struct ChshArgs {
    /// `qm` for the singlet, otherwise a zoo model.
    #[arg(long, default_value = "qm")]
    model: String,
    #[arg(long, conflicts_with = "model")]
    model_file: Option<PathBuf>,
    /// a = 0, a' = 90, b = 45, b' = 135 degrees.
    #[arg(long, conflicts_with = "angles")]
    standard_angles: bool,
    /// a,a',b,b' in degrees.
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
    /// Scan all quadruples on a circle grid with this step in degrees.
    #[arg(long)]
    scan: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
struct KsArgs {
    /// Restrict to one preparation mode (shared/noncontextual or
    /// per-preparation/local-contextual).
    #[arg(long)]
    mode: Option<PreparationMode>,
    /// Perturb the first Pauli matrix before the identity check.
    #[arg(long, hide = true, allow_negative_numbers = true)]
    perturb: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
struct ScanArgs {
    /// Setting a in degrees; b = a + theta.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, default_value_t = 180.0, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Conditioning outcome A'.
    #[arg(long, default_value = "+1", allow_negative_numbers = true)]
    outcome_a: Outcome,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, conflicts_with = "model")]
    model_file: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Pipeline(args) => commands::pipeline(args),
        Command::Check(args) => commands::check(args),
        Command::Chsh(args) => commands::chsh(args),
        Command::Ks(args) => commands::ks(args),
        Command::Scan(args) => commands::scan(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("eprb: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
