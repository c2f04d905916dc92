use std::path::{Path, PathBuf};

use gptft::model::ModelConfig;
use gptft::strategy::StrategyRegistry;
use gptft::tokenizer::{BpeVocab, DEFAULT_MAX_LEN};
use gptft::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Category, CliError, CliResult};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "GPTFT_CONFIG";

/// Everything a command may need, read from a flat TOML file. Relative
/// paths in the file resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    pub n_classes: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub max_len: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub strategy: String,
    pub seed: u64,
    pub shuffle: bool,
    pub max_steps: Option<usize>,

    pub checkpoint: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub merges: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    /// A labeled corpus split 70/15/15 with `seed`; alternative to the three
    /// explicit split files.
    pub data: Option<PathBuf>,
    pub train_data: Option<PathBuf>,
    pub val_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            preset: "gpt2-small".into(),
            n_classes: 2,
            epochs: t.epochs,
            batch_size: t.batch_size,
            max_len: DEFAULT_MAX_LEN,
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            eps: t.eps,
            weight_decay: t.weight_decay,
            strategy: t.strategy,
            seed: t.seed,
            shuffle: t.shuffle,
            max_steps: t.max_steps,
            checkpoint: None,
            vocab: None,
            merges: None,
            rules: None,
            data: None,
            train_data: None,
            val_data: None,
            test_data: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// What a command requires beyond the always-checked fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub checkpoint: bool,
    pub data: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::new(Category::Config, e.to_string()))
    }

    /// Reads `path`, rebasing relative paths onto its directory.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::parse(&text)
            .map_err(|e| CliError::new(Category::Config, format!("{}: {}", path.display(), e.message)))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    /// The explicit file if given, else `$GPTFT_CONFIG` if set, else defaults.
    pub fn load(explicit: Option<&Path>) -> CliResult<Self> {
        match explicit {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        for p in [
            &mut self.checkpoint,
            &mut self.vocab,
            &mut self.merges,
            &mut self.rules,
            &mut self.data,
            &mut self.train_data,
            &mut self.val_data,
            &mut self.test_data,
        ] {
            fix(p);
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            max_len: self.max_len,
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
            strategy: self.strategy.clone(),
            seed: self.seed,
            shuffle: self.shuffle,
            max_steps: self.max_steps,
        }
    }

    pub fn model_config(&self) -> CliResult<ModelConfig> {
        let mut model = ModelConfig::preset(&self.preset)?;
        model.n_classes = self.n_classes;
        Ok(model)
    }

    /// Every invalid field, one message each.
    pub fn problems(&self, needs: Needs, registry: &StrategyRegistry) -> Vec<String> {
        let mut out = self.train_config().problems();
        if let Err(e) = ModelConfig::preset(&self.preset) {
            out.push(format!("preset: {e}"));
        }
        if self.n_classes < 2 {
            out.push("n_classes must be at least 2".into());
        }
        if let Err(e) = registry.get(&self.strategy) {
            out.push(format!("strategy: {e}"));
        }
        let mut exists = |field: &str, path: &Option<PathBuf>| {
            if let Some(p) = path {
                if !p.exists() {
                    out.push(format!("{field}: {} does not exist", p.display()));
                }
            }
        };
        exists("checkpoint", &self.checkpoint);
        exists("vocab", &self.vocab);
        exists("merges", &self.merges);
        exists("rules", &self.rules);
        exists("data", &self.data);
        exists("train_data", &self.train_data);
        exists("val_data", &self.val_data);
        exists("test_data", &self.test_data);
        if self.vocab.is_some() != self.merges.is_some() {
            out.push("vocab and merges must be given together".into());
        }
        if needs.checkpoint && self.checkpoint.is_none() {
            out.push("checkpoint: required (create one with `gptft init` or convert a pretrained model)".into());
        }
        if needs.data {
            let splits = [&self.train_data, &self.val_data, &self.test_data];
            let given = splits.iter().filter(|p| p.is_some()).count();
            match (self.data.is_some(), given) {
                (true, 0) | (false, 3) => {}
                (true, _) => out.push("data: give either data or train_data/val_data/test_data, not both".into()),
                (false, 0) => out.push("data: required (or train_data, val_data and test_data)".into()),
                (false, _) => out.push("train_data, val_data and test_data must be given together".into()),
            }
        }
        out
    }

    pub fn validate(&self, needs: Needs, registry: &StrategyRegistry) -> CliResult<()> {
        match self.problems(needs, registry) {
            p if p.is_empty() => Ok(()),
            p => Err(CliError::new(Category::Config, format!("invalid configuration: {}", p.join("; ")))),
        }
    }

    /// The configured BPE files, or the 256-token byte-level vocabulary.
    pub fn tokenizer(&self) -> CliResult<BpeVocab> {
        match (&self.vocab, &self.merges) {
            (Some(v), Some(m)) => Ok(BpeVocab::from_files(v, m)?),
            (None, None) => Ok(BpeVocab::byte_level()),
            _ => Err(CliError::new(Category::Config, "vocab and merges must be given together")),
        }
    }
}
