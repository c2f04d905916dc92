//! The `gptft` command line: weak labeling, splitting, training,
//! evaluation, parameter accounting and plot tables.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{RunConfig, CONFIG_ENV};
pub use error::{Category, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "gptft", version, about = "Weak labeling and selective fine-tuning of GPT-2 classifiers")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override values from the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Flat TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// head-only, selective or full.
    #[arg(long, global = true)]
    pub strategy: Option<String>,

    /// gpt2-small or toy.
    #[arg(long, global = true)]
    pub preset: Option<String>,

    /// Root of the labels/, splits/, runs/ and plots/ directories.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak-label a corpus and print the class distribution.
    Label {
        input: PathBuf,
        /// Rule file (defaults to the built-in rules).
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Defaults to <output-dir>/labels/<input stem>.jsonl.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Shuffle a labeled corpus and write 70/15/15 train/val/test files.
    Split { input: PathBuf },
    /// Fine-tune a checkpoint and write a run directory.
    Train {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Labeled corpus to split with the seed.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Directory holding train.jsonl, val.jsonl and test.jsonl.
        #[arg(long, conflicts_with = "data")]
        splits: Option<PathBuf>,
        /// Write into this directory instead of runs/<timestamp>-<strategy>.
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Evaluate a checkpoint on a labeled corpus.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        corpus: PathBuf,
        /// Also write the metrics JSON here.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print parameter counts and the trainable fraction.
    Params,
    /// Turn run reports into timing, accuracy and F1/AUROC tables.
    PlotData {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
    /// Encode text to token ids, or decode ids with --decode.
    Tokenize {
        #[arg(long)]
        decode: bool,
        /// Texts (or ids); reads lines from stdin when empty.
        items: Vec<String>,
    },
    /// Write a randomly initialized checkpoint for the preset.
    Init {
        #[arg(long, short)]
        output: PathBuf,
    },
}

/// Loads the config and applies the global overrides.
pub fn resolve_config(global: &GlobalArgs) -> CliResult<RunConfig> {
    let mut config = RunConfig::load(global.config.as_deref())?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(s) = &global.strategy {
        config.strategy = s.clone();
    }
    if let Some(p) = &global.preset {
        config.preset = p.clone();
    }
    if let Some(d) = &global.output_dir {
        config.output_dir = d.clone();
    }
    Ok(config)
}

/// Runs one parsed invocation, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    let config = resolve_config(&cli.global)?;
    commands::dispatch(cli.command, config, out)
}
