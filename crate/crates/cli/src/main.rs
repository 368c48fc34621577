//! `relaylab`: achievable rates and coding simulations for relay channels.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relaylab::optimize::Scheme;

use output::{Envelope, RunManifest, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "relaylab", version, about = "Achievable rates and coding simulations for relay channels")]
struct Cli {
    /// Units for reported information quantities.
    #[arg(long, global = true, value_enum, default_value_t = Units::Nats)]
    units: Units,
    /// Append summary rows to this CSV file.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    pub fn factor(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the rate conditions of one parameter point.
    Evaluate(EvaluateArgs),
    /// Search for parameters maximizing the achievable rate.
    Optimize(OptimizeArgs),
    /// Run a numerical consistency check.
    Verify(VerifyArgs),
    /// Estimate the error probability of the block-Markov code by simulation.
    Simulate(SimulateArgs),
    /// Degrade a compressor until the single-rate form holds at a given rate.
    Repair(RepairArgs),
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: relaylab::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// `new`, `caf` (compact form) or `caf:<theorem2|form1|form2|form3|compact>`.
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 20)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exhaustive lattice search instead of random-ascent restarts.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 5)]
    pub grid_points: usize,
    /// Size of the quantization alphabet; defaults to |Y1|.
    #[arg(long)]
    pub yhat_size: Option<usize>,
    /// Skip the compress-and-forward search used as an extra start for `new`.
    #[arg(long)]
    pub no_caf_start: bool,
    /// Write the best parameters to this file.
    #[arg(long, value_name = "PATH")]
    pub params_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Degeneration,
    AppendixB,
    Equivalence,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub check: Check,
    #[arg(long)]
    pub channel: PathBuf,
    /// Check this parameter file instead of random draws.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Number of random parameter draws (100 for degeneration, 10 for appendix-b).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of blocks for appendix-b.
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
    /// Lattice points per probability row for equivalence.
    #[arg(long, default_value_t = 5)]
    pub grid_points: usize,
    #[arg(long)]
    pub yhat_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Block length.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub blocks: usize,
    #[arg(long)]
    pub messages: usize,
    #[arg(long, default_value_t = 1)]
    pub quantizers: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Compress-and-forward parameter file.
    #[arg(long)]
    pub params: PathBuf,
    /// Target rate in nats.
    #[arg(long)]
    pub rate: f64,
    #[arg(long, value_name = "PATH")]
    pub params_out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit status 2.
    Input(String),
    /// Anything else: exit status 1.
    Internal(String),
}

impl From<relaylab::Error> for CliError {
    fn from(e: relaylab::Error) -> Self {
        if e.is_validation() {
            CliError::Input(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RELAYLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("RELAYLAB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: Cli, command_line: String) -> Result<String, CliError> {
    configure_threads()?;
    let mut manifest = RunManifest::new(command_line);
    let ctx = commands::Context {
        units: cli.units,
    };
    let (name, out) = match &cli.command {
        Command::Evaluate(a) => ("evaluate", commands::evaluate(&ctx, a, &mut manifest)?),
        Command::Optimize(a) => ("optimize", commands::optimize(&ctx, a, &mut manifest)?),
        Command::Verify(a) => ("verify", commands::verify(&ctx, a, &mut manifest)?),
        Command::Simulate(a) => ("simulate", commands::simulate(&ctx, a, &mut manifest)?),
        Command::Repair(a) => ("repair", commands::repair(&ctx, a, &mut manifest)?),
    };
    if let Some(path) = &cli.csv {
        output::append_csv(path, &out.csv)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        manifest.outputs.push(path.display().to_string());
    }
    let env = Envelope {
        schema: SCHEMA_VERSION,
        command: name,
        units: cli.units.as_str(),
        report: out.report,
        manifest: &manifest,
    };
    Ok(output::to_exact_json(&env))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut line = vec!["relaylab".to_string()];
    line.extend(args.into_iter().skip(1));
    match run(cli, line.join(" ")) {
        Ok(json) => {
            // A closed pipe on stdout is the reader's choice, not a failure.
            let _ = writeln!(std::io::stdout(), "{json}");
            ExitCode::SUCCESS
        }
        Err(CliError::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(1)
        }
    }
}
