//! Mini-batch fine-tuning loop, dataset splitting and evaluation.

mod report;
mod split;

pub use report::{EpochMetrics, FinalMetrics, MetricsReport};
pub use split::{split_dataset, Split, MIN_SPLIT_SIZE};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::model::{logits, ModelConfig, ParameterStore};
use crate::optimizer::{zero_grad, AdamW, AdamWConfig};
use crate::strategy::{apply_strategy, FineTuneStrategy, ParamPartition, StrategyRegistry};
use crate::tensor::Tape;
use crate::tokenizer::{BpeVocab, EncodedBatch, DEFAULT_MAX_LEN};

/// Class treated as positive by F1 and AUROC.
pub const POSITIVE_CLASS: usize = 1;

/// A document and its class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub doc_id: String,
    pub text: String,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
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
    /// Stops training after this many optimizer steps in total.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adamw = AdamWConfig::default();
        TrainConfig {
            epochs: 10,
            batch_size: 16,
            max_len: DEFAULT_MAX_LEN,
            lr: adamw.lr,
            beta1: adamw.beta1,
            beta2: adamw.beta2,
            eps: adamw.eps,
            weight_decay: adamw.weight_decay,
            strategy: "selective".into(),
            seed: 0,
            shuffle: true,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    /// Every violated constraint, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.epochs == 0 {
            out.push("epochs must be at least 1".to_string());
        }
        if self.batch_size == 0 {
            out.push("batch_size must be at least 1".to_string());
        }
        if self.max_len == 0 {
            out.push("max_len must be at least 1".to_string());
        }
        if self.max_steps == Some(0) {
            out.push("max_steps must be at least 1 when set".to_string());
        }
        if let Err(e) = self.adamw().validate() {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.problems() {
            p if p.is_empty() => Ok(()),
            p => Err(Error::InvalidConfig(p.join("; "))),
        }
    }
}

/// Loss and hit count of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
    pub rows: usize,
}

/// Owns the optimizer state for one fine-tuning run over a store whose
/// strategy has been applied.
pub struct Trainer<'a> {
    params: &'a mut ParameterStore,
    config: &'a ModelConfig,
    optimizer: AdamW,
    dropout_rng: ChaCha8Rng,
    partition: ParamPartition,
}

impl<'a> Trainer<'a> {
    pub fn new(
        params: &'a mut ParameterStore,
        config: &'a ModelConfig,
        strategy: &dyn FineTuneStrategy,
        adamw: AdamWConfig,
        seed: u64,
    ) -> Result<Self> {
        adamw.validate()?;
        let partition = apply_strategy(params, strategy, config);
        Ok(Trainer {
            params,
            config,
            optimizer: AdamW::new(adamw),
            // A stream distinct from the shuffling RNG seeded with `seed`.
            dropout_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            partition,
        })
    }

    pub fn partition(&self) -> &ParamPartition {
        &self.partition
    }

    pub fn params(&self) -> &ParameterStore {
        self.params
    }

    /// zero_grad → forward → last token → classify → cross-entropy →
    /// backward → AdamW step.
    pub fn step(&mut self, batch: &EncodedBatch) -> Result<StepStats> {
        zero_grad(self.params);
        let mut tape = Tape::new();
        let z = logits(&mut tape, self.params, batch, self.config, Some(&mut self.dropout_rng))?;
        let loss = tape.cross_entropy(z, &batch.labels)?;
        let loss_value = tape.value(loss)[0] as f64;
        let preds = metrics::argmax_rows(tape.value(z), self.config.n_classes);
        let correct = preds.iter().zip(&batch.labels).filter(|(p, l)| p == l).count();
        if !loss_value.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: 0, batch: 0 });
        }
        for g in tape.backward(loss)? {
            if let Some(id) = g.key {
                self.params.param_mut(id).tensor.accumulate_grad(&g.grad)?;
            }
        }
        self.optimizer.step(self.params)?;
        Ok(StepStats {
            loss: loss_value,
            correct,
            rows: batch.batch,
        })
    }
}

/// Evaluation of a store on a labelled set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub f1: f64,
    pub auroc: Option<f64>,
    pub logits: Vec<f32>,
}

/// Tokenizes every text once, keeping full token sequences.
pub fn pretokenize(examples: &[Example], vocab: &BpeVocab) -> Vec<Vec<u32>> {
    examples.iter().map(|e| vocab.encode(&e.text)).collect()
}

fn make_batch(
    tokens: &[Vec<u32>],
    examples: &[Example],
    rows: &[usize],
    max_len: usize,
    pad_id: u32,
) -> Result<EncodedBatch> {
    let seqs: Vec<&[u32]> = rows.iter().map(|&i| tokens[i].as_slice()).collect();
    let labels: Vec<usize> = rows.iter().map(|&i| examples[i].label).collect();
    let batch = EncodedBatch::from_token_ids(&seqs, &labels, max_len, pad_id)?;
    for &r in &batch.empty_rows {
        log::warn!("document `{}` has no tokens", examples[rows[r]].doc_id);
    }
    Ok(batch)
}

/// Runs the model without gradients over `examples` in batches.
pub fn evaluate(
    params: &ParameterStore,
    config: &ModelConfig,
    vocab: &BpeVocab,
    examples: &[Example],
    batch_size: usize,
    max_len: usize,
) -> Result<Evaluation> {
    let tokens = pretokenize(examples, vocab);
    evaluate_tokens(params, config, &tokens, examples, batch_size, max_len, vocab.pad_id())
}

fn evaluate_tokens(
    params: &ParameterStore,
    config: &ModelConfig,
    tokens: &[Vec<u32>],
    examples: &[Example],
    batch_size: usize,
    max_len: usize,
    pad_id: u32,
) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let order: Vec<usize> = (0..examples.len()).collect();
    let mut all = Vec::with_capacity(examples.len() * config.n_classes);
    for rows in order.chunks(batch_size.max(1)) {
        let batch = make_batch(tokens, examples, rows, max_len, pad_id)?;
        let mut tape = Tape::no_grad();
        let z = logits(&mut tape, params, &batch, config, None)?;
        all.extend_from_slice(tape.value(z));
    }
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    let preds = metrics::argmax_rows(&all, config.n_classes);
    let scores = metrics::class_probability(&all, config.n_classes, POSITIVE_CLASS);
    let positives: Vec<bool> = labels.iter().map(|&l| l == POSITIVE_CLASS).collect();
    Ok(Evaluation {
        accuracy: metrics::agreement(&preds, &labels),
        f1: metrics::f1_score(&preds, &labels, POSITIVE_CLASS)?,
        auroc: metrics::auroc(&scores, &positives)?,
        logits: all,
    })
}

/// Fine-tunes `params` on `data.train`, validating after every epoch and
/// testing once at the end. The strategy is looked up by
/// `config.strategy` in `registry` and applied before training.
pub fn train(
    params: &mut ParameterStore,
    model: &ModelConfig,
    vocab: &BpeVocab,
    data: &Split<Example>,
    config: &TrainConfig,
    registry: &StrategyRegistry,
) -> Result<MetricsReport> {
    config.validate()?;
    model.validate()?;
    for (name, split) in [("train split", &data.train), ("validation split", &data.val), ("test split", &data.test)] {
        if split.is_empty() {
            return Err(Error::EmptyInput(name));
        }
    }
    if let Some(e) = [&data.train, &data.val, &data.test]
        .into_iter()
        .flatten()
        .find(|e| e.label >= model.n_classes)
    {
        return Err(Error::LabelOutOfRange {
            doc_id: e.doc_id.clone(),
            label: e.label,
            classes: model.n_classes,
        });
    }
    if vocab.vocab_size() > model.vocab_size {
        return Err(Error::InvalidConfig(format!(
            "tokenizer has {} tokens but the model embeds only {}",
            vocab.vocab_size(),
            model.vocab_size
        )));
    }
    let strategy = registry.get(&config.strategy)?;
    let max_len = config.max_len.min(model.max_positions);
    if max_len < config.max_len {
        log::warn!("max_len {} exceeds the model's {} positions; truncating to {max_len}", config.max_len, model.max_positions);
    }
    let pad_id = vocab.pad_id();
    let train_tokens = pretokenize(&data.train, vocab);
    let val_tokens = pretokenize(&data.val, vocab);
    let test_tokens = pretokenize(&data.test, vocab);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trainer = Trainer::new(params, model, &*strategy, config.adamw(), config.seed)?;
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut steps = 0usize;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let (mut loss_sum, mut correct, mut seen) = (0.0, 0usize, 0usize);
        let mut stop = false;
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let batch = make_batch(&train_tokens, &data.train, rows, max_len, pad_id)?;
            let stats = trainer.step(&batch).map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { epoch, batch: b },
                e => e,
            })?;
            loss_sum += stats.loss * stats.rows as f64;
            correct += stats.correct;
            seen += stats.rows;
            steps += 1;
            log::debug!("epoch {epoch} batch {b}: loss {:.5}", stats.loss);
            if config.max_steps.is_some_and(|m| steps >= m) {
                stop = true;
                break;
            }
        }
        let wall = started.elapsed().as_secs_f64();
        let val = evaluate_tokens(trainer.params(), model, &val_tokens, &data.val, config.batch_size, max_len, pad_id)?;
        let record = EpochMetrics {
            epoch,
            train_loss: loss_sum / seen as f64,
            train_acc: correct as f64 / seen as f64,
            val_acc: val.accuracy,
            epoch_wall_seconds: wall,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} train_acc {:.4} val_acc {:.4} ({:.1}s)",
            record.train_loss,
            record.train_acc,
            record.val_acc,
            record.epoch_wall_seconds
        );
        epochs.push(record);
        if stop {
            break;
        }
    }

    let partition = trainer.partition().summary();
    let test = evaluate_tokens(trainer.params(), model, &test_tokens, &data.test, config.batch_size, max_len, pad_id)?;
    Ok(MetricsReport {
        strategy: strategy.name().to_string(),
        seed: config.seed,
        steps,
        epochs,
        final_metrics: FinalMetrics {
            test_acc: test.accuracy,
            f1: test.f1,
            auroc: test.auroc,
        },
        partition,
    })
}
