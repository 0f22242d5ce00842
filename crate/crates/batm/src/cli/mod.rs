//! Command-line entry point wiring all modules together.
//!
//! One process, subcommand style. Progress goes to stderr; machine-readable
//! outputs land in the run's output directory.

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{parse_config, Config};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "batm",
    about = "Bi-level attention topical model: train, explain, and score news classifiers"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: CommandKind,
    /// JSON config file; omitted keys take documented defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. --set lambda=1e-4 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory for all artifacts of this run.
    #[arg(long, global = true, default_value = "batm-out", value_name = "DIR")]
    pub out: PathBuf,
    /// Shorthand for --set seed=N.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Run training once per seed (train only), e.g. --seeds 1,2,3,4,5.
    #[arg(long, global = true, value_delimiter = ',', value_name = "A,B,C")]
    pub seeds: Option<Vec<u64>>,
    /// Worker threads; BATM_THREADS is the fallback, default all cores.
    /// Results are identical at any setting.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum CommandKind {
    /// Load a JSON-lines corpus, build the vocabulary, write split manifests.
    Prepare,
    /// Train a classifier and checkpoint the best-validation epoch.
    Train,
    /// Evaluate a checkpoint on the configured split.
    Eval,
    /// Extract topic descriptors (and optionally export topic matrices).
    Topics,
    /// Score topic descriptors with C_v coherence.
    Coherence,
    /// Document- and token-level entropy diagnostics.
    EntropyReport,
    /// Verify gradients against central finite differences (64-bit).
    Gradcheck,
    /// Train across a list of lambda values and tabulate the trade-off.
    LambdaSweep,
}

/// A parsed invocation.
#[derive(Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
    pub out_dir: PathBuf,
    pub seeds: Option<Vec<u64>>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_args(args: Args) -> Result<Self> {
        let mut overrides = Vec::with_capacity(args.set.len() + 1);
        for pair in &args.set {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {pair:?}")))?;
            overrides.push((key.trim().to_string(), value.trim().to_string()));
        }
        if let Some(seed) = args.seed {
            overrides.push(("seed".into(), seed.to_string()));
        }
        Ok(RunConfig {
            command: args.command,
            config_path: args.config,
            overrides,
            out_dir: args.out,
            seeds: args.seeds,
            threads: args.threads,
        })
    }

    pub fn parse_effective_config(&self) -> Result<Config> {
        parse_config(self.config_path.as_deref(), &self.overrides)
    }
}

fn thread_count(run: &RunConfig) -> Option<usize> {
    run.threads.or_else(|| {
        std::env::var("BATM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

/// Execute a parsed invocation; inner parallelism is bounded by the resolved
/// thread count and results do not depend on it.
pub fn dispatch(run: &RunConfig) -> Result<()> {
    match thread_count(run).filter(|&n| n > 0) {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(|| commands::execute(run))
        }
        None => commands::execute(run),
    }
}

/// Process entry point: parse args, dispatch, map failures to a nonzero exit
/// status with a machine-readable error record on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let run = match RunConfig::from_args(args) {
        Ok(run) => run,
        Err(e) => return fail(&e),
    };
    match dispatch(&run) {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(error: &Error) -> i32 {
    let record = serde_json::json!({
        "error": error.to_string(),
        "kind": error.kind(),
    });
    eprintln!("{record}");
    1
}
