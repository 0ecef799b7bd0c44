//! The `posc` command line: simulations, a local chain, analyses and keys.
//!
//! [`dispatch`] is the whole program; `main` only wires it to the process
//! streams, so tests can run commands in-process.

mod analyze;
mod chain;
mod keys;
mod output;
mod sim;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use output::Format;

#[derive(Debug, Parser)]
#[command(name = "posc", version, about = "Proof-of-Social-Capital toolkit")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Seed for every stochastic step; overrides seeds in config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for default paths; defaults to $HOME/.posc.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Network simulations.
    #[command(subcommand)]
    Sim(sim::SimCommand),
    /// Create, extend and verify a local chain file.
    #[command(subcommand)]
    Chain(chain::ChainCommand),
    /// Register a new identity on a local chain.
    Register(chain::RegisterArgs),
    /// Endorse a creator on a local chain.
    Endorse(chain::EndorseArgs),
    /// Move an endorsement to another creator on a local chain.
    Reassign(chain::ReassignArgs),
    /// Inequality and power analyses.
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCommand),
    /// Platform keys.
    #[command(subcommand)]
    Keys(keys::KeysCommand),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Store(#[from] posc_core::ledger::StoreError),
    #[error(transparent)]
    Ledger(#[from] posc_core::ledger::LedgerError),
    #[error(transparent)]
    Tx(#[from] posc_core::ledger::TxError),
    #[error(transparent)]
    Sim(#[from] posc_netsim::SimError),
    #[error(transparent)]
    Analysis(#[from] posc_analysis::AnalysisError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("chain was not created with seed {0}")]
    SeedMismatch(u64),
    #[error("no key is known for {0}")]
    UnknownKey(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("{0}")]
    BadArgument(String),
}

impl CliError {
    /// Name of the underlying module error, printed on stderr.
    pub fn name(&self) -> String {
        match self {
            CliError::Store(e) => e.name().to_string(),
            CliError::Ledger(e) => e.name().to_string(),
            CliError::Tx(e) => e.name(),
            CliError::Sim(e) => e.name().to_string(),
            CliError::Analysis(e) => e.name().to_string(),
            CliError::Io(_) => "Io".into(),
            CliError::Json(_) => "Json".into(),
            CliError::Csv(_) => "Csv".into(),
            CliError::SeedMismatch(_) => "SeedMismatch".into(),
            CliError::UnknownKey(_) => "UnknownKey".into(),
            CliError::UnknownScenario(_) => "UnknownScenario".into(),
            CliError::BadArgument(_) => "BadArgument".into(),
        }
    }
}

/// Resolved global options.
pub(crate) struct Ctx {
    pub format: Format,
    pub seed: Option<u64>,
    data_dir: Option<PathBuf>,
}

impl Ctx {
    pub fn seed_or(&self, default: u64) -> u64 {
        self.seed.unwrap_or(default)
    }

    pub fn data_dir(&self) -> Result<PathBuf, CliError> {
        if let Some(d) = &self.data_dir {
            return Ok(d.clone());
        }
        std::env::var_os("HOME")
            .map(|h| PathBuf::from(h).join(".posc"))
            .ok_or_else(|| CliError::BadArgument("HOME is unset; pass --data-dir".into()))
    }

    /// `path`, or `name` inside the data directory.
    pub fn path_or_default(&self, path: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
        match path {
            Some(p) => Ok(p.clone()),
            None => {
                let dir = self.data_dir()?;
                std::fs::create_dir_all(&dir)?;
                Ok(dir.join(name))
            }
        }
    }
}

/// Runs one command. Returns the process exit code: 0 on success, 2 for
/// usage errors and 1 for everything else.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let ctx = Ctx { format: cli.format, seed: cli.seed, data_dir: cli.data_dir };
    let result = match cli.command {
        Command::Sim(c) => sim::run(&ctx, c, out),
        Command::Chain(c) => chain::run(&ctx, c, out),
        Command::Register(a) => chain::register(&ctx, a, out),
        Command::Endorse(a) => chain::endorse(&ctx, a, out),
        Command::Reassign(a) => chain::reassign(&ctx, a, out),
        Command::Analyze(c) => analyze::run(&ctx, c, out),
        Command::Keys(c) => keys::run(&ctx, c, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.name());
            1
        }
    }
}

/// Comma-separated list argument.
pub(crate) fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Small epochs and a low validator threshold, for local experiments.
    Small,
    /// The full protocol constants.
    Default,
}
