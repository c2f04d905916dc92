use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use gptft::model::{load_backbone, save_checkpoint};
use gptft::strategy::StrategyRegistry;
use gptft::trainer::{split_dataset, train, MetricsReport, Split};

use crate::config::{Needs, RunConfig};
use crate::corpus::{create_dir, read_examples};
use crate::error::{Category, CliError, CliResult};

pub const REPORT_FILE: &str = "report.json";
pub const EPOCHS_FILE: &str = "epochs.tsv";
pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
pub const CONFIG_FILE: &str = "config.toml";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Use this directory instead of a fresh `runs/<timestamp>-<strategy>`.
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub report: MetricsReport,
    pub run_dir: PathBuf,
}

/// Exclusive ownership of a run directory for the life of the value.
struct RunLock(PathBuf);

impl RunLock {
    fn acquire(dir: &Path) -> CliResult<Self> {
        let path = dir.join(LOCK_FILE);
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                CliError::new(
                    Category::Lock,
                    format!("{} is in use by another command (delete {} if it is stale)", dir.display(), path.display()),
                )
            } else {
                CliError::io(&path, e)
            }
        })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(RunLock(path))
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// Creates `runs/<timestamp>-<strategy>`, adding a numeric suffix when two
/// runs start within the same second.
fn fresh_run_dir(config: &RunConfig, strategy: &str) -> CliResult<PathBuf> {
    let runs = config.output_dir.join("runs");
    create_dir(&runs)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    for n in 1.. {
        let name = if n == 1 {
            format!("{stamp}-{strategy}")
        } else {
            format!("{stamp}-{strategy}-{n}")
        };
        let dir = runs.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(CliError::io(&dir, e)),
        }
    }
    unreachable!("the suffix search always terminates")
}

fn write(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Loads the checkpoint, fine-tunes it and writes the report, per-epoch
/// table, final checkpoint and resolved config into the run directory.
/// Configuration is validated in full before any data or weights are read.
pub fn cmd_train(config: &RunConfig, options: &TrainOptions) -> CliResult<TrainOutcome> {
    let registry = StrategyRegistry::with_builtins();
    config.validate(
        Needs {
            checkpoint: true,
            data: true,
        },
        &registry,
    )?;
    let model = config.model_config()?;
    let vocab = config.tokenizer()?;
    let data = match &config.data {
        Some(path) => split_dataset(&read_examples(path)?, config.seed)?,
        None => {
            let read = |p: &Option<PathBuf>| read_examples(p.as_deref().expect("validated"));
            Split {
                train: read(&config.train_data)?,
                val: read(&config.val_data)?,
                test: read(&config.test_data)?,
            }
        }
    };
    let checkpoint = config.checkpoint.as_deref().expect("validated");
    let mut params = load_backbone(checkpoint, &model, config.seed)?;

    let strategy = registry.get(&config.strategy)?;
    let run_dir = match &options.run_dir {
        Some(dir) => {
            create_dir(dir)?;
            dir.clone()
        }
        None => fresh_run_dir(config, strategy.name())?,
    };
    let _lock = RunLock::acquire(&run_dir)?;
    write(&run_dir.join(CONFIG_FILE), &config.to_toml())?;
    let report = train(&mut params, &model, &vocab, &data, &config.train_config(), &registry)?;
    write(&run_dir.join(REPORT_FILE), &(report.to_json() + "\n"))?;
    write(&run_dir.join(EPOCHS_FILE), &report.epochs_tsv())?;
    save_checkpoint(&params, &model, &run_dir.join(CHECKPOINT_FILE))?;
    Ok(TrainOutcome { report, run_dir })
}
