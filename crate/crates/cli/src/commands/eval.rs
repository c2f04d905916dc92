use std::path::Path;

use gptft::model::{load_checkpoint, read_metadata};
use gptft::trainer::evaluate;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::read_examples;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub documents: usize,
    pub accuracy: f64,
    pub f1: f64,
    /// Absent when the corpus holds a single class.
    pub auroc: Option<f64>,
}

/// Evaluates a checkpoint, taking the architecture from its own metadata,
/// with the configured batch size and sequence length.
pub fn cmd_eval(checkpoint: &Path, corpus: &Path, config: &RunConfig) -> CliResult<EvalMetrics> {
    let model = read_metadata(checkpoint)?.config;
    let params = load_checkpoint(checkpoint, &model)?;
    let vocab = config.tokenizer()?;
    let examples = read_examples(corpus)?;
    if let Some(e) = examples.iter().find(|e| e.label >= model.n_classes) {
        return Err(gptft::Error::LabelOutOfRange {
            doc_id: e.doc_id.clone(),
            label: e.label,
            classes: model.n_classes,
        }
        .into());
    }
    let max_len = config.max_len.min(model.max_positions);
    let eval = evaluate(&params, &model, &vocab, &examples, config.batch_size.max(1), max_len)?;
    Ok(EvalMetrics {
        documents: examples.len(),
        accuracy: eval.accuracy,
        f1: eval.f1,
        auroc: eval.auroc,
    })
}
