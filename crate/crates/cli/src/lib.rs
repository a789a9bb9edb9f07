//! Command-line experiments over the `postconc` library.
//!
//! Every subcommand is deterministic given its configuration and master
//! seed, writes its data artifacts under `--out`, and logs to stderr.

pub mod commands;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use report::{emit_report, Format, Report};

pub const DEFAULT_SEED: u64 = 20_240_611;

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Some assertion failed or the report could not be written.
pub const EXIT_FAILURE: i32 = 1;
/// Bad arguments or configuration.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "postconc", version, about = "Concentration checks for conjugate posteriors and the adaptive query game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides any seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    /// Overrides the subcommand's main repetition count.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Variance-proxy sweep of the Beta family against both bounds.
    VerifyBeta,
    /// Dirichlet projections against their Beta laws (KS tests).
    VerifyDirichlet,
    /// Chi moment recurrence, moment criterion and tails.
    VerifyChi,
    /// Moment-ratio lemma, raw-moment criterion and the λ⁴ counterexample.
    LemmaChecks,
    /// Posterior-mean martingale simulation, Azuma sums and stability.
    Martingale,
    /// The adaptive curator/analyst game.
    Game {
        /// Also write per-trial transcripts for the first N trials.
        #[arg(long, value_name = "N")]
        transcripts: Option<u64>,
    },
    /// Sweeps of the conjectured models.
    Conjectures,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyBeta => "verify-beta",
            Command::VerifyDirichlet => "verify-dirichlet",
            Command::VerifyChi => "verify-chi",
            Command::LemmaChecks => "lemma-checks",
            Command::Martingale => "martingale",
            Command::Game { .. } => "game",
            Command::Conjectures => "conjectures",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Run(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<postconc::Error> for CliError {
    fn from(e: postconc::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

/// Reads a JSON config, or the default when no path is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

pub fn log(command: &str, message: impl std::fmt::Display) {
    eprintln!("[postconc {command}] {message}");
}

/// Runs the subcommand and returns the report without writing anything.
pub fn execute(command: &Command, common: &CommonArgs) -> Result<Report, CliError> {
    match command {
        Command::VerifyBeta => commands::beta::run(common),
        Command::VerifyDirichlet => commands::dirichlet::run(common),
        Command::VerifyChi => commands::chi::run(common),
        Command::LemmaChecks => commands::lemmas::run(common),
        Command::Martingale => commands::martingale::run(common),
        Command::Game { transcripts } => commands::game::run(common, *transcripts),
        Command::Conjectures => commands::conjectures::run(common),
    }
}

/// Parses `args` (including the program name) and runs to completion,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let name = cli.command.name();
    let started = std::time::Instant::now();
    let report = match execute(&cli.command, &cli.common) {
        Ok(r) => r,
        Err(e) => {
            log(name, &e);
            return e.exit_code();
        }
    };
    match emit_report(&report, cli.common.format, &cli.common.out) {
        Ok(manifest) => {
            for out in &manifest.outputs {
                log(name, format_args!("wrote {}", cli.common.out.join(&out.path).display()));
            }
        }
        Err(e) => {
            log(name, &e);
            return EXIT_FAILURE;
        }
    }
    log(name, format_args!("finished in {:.1} s", started.elapsed().as_secs_f64()));
    if report.passed() {
        log(name, "all assertions passed");
        EXIT_OK
    } else {
        for f in &report.failures {
            log(name, format_args!("FAILED: {f}"));
        }
        EXIT_FAILURE
    }
}
