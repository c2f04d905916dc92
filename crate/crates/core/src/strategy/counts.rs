use serde::Serialize;

use super::FineTuneStrategy;
use crate::model::{ModelConfig, ParamGroup};

/// Closed-form parameter counts by group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParameterCounts {
    pub token_embedding: usize,
    pub position_embedding: usize,
    pub per_block: usize,
    pub final_ln: usize,
    pub head: usize,
    /// Everything except the head: the size of a pretrained checkpoint.
    pub backbone: usize,
    pub total: usize,
}

impl ParameterCounts {
    pub fn embeddings(&self) -> usize {
        self.token_embedding + self.position_embedding
    }

    /// Parameters `strategy` would train.
    pub fn trainable(&self, strategy: &dyn FineTuneStrategy, config: &ModelConfig) -> usize {
        groups(config)
            .filter(|&g| strategy.is_trainable(g, config))
            .map(|g| group_count(g, config))
            .sum()
    }
}

fn groups(config: &ModelConfig) -> impl Iterator<Item = ParamGroup> {
    [ParamGroup::Embeddings]
        .into_iter()
        .chain((0..config.n_layers).map(ParamGroup::Block))
        .chain([ParamGroup::FinalLn, ParamGroup::Head])
}

fn block_count(config: &ModelConfig) -> usize {
    let (d, ff) = (config.d_model, config.d_ff);
    let attention = 3 * d * d + 3 * d + d * d + d;
    let mlp = d * ff + ff + ff * d + d;
    let layer_norms = 4 * d;
    attention + mlp + layer_norms
}

/// Closed-form size of one parameter group.
pub fn group_count(group: ParamGroup, config: &ModelConfig) -> usize {
    let d = config.d_model;
    match group {
        ParamGroup::Embeddings => (config.vocab_size + config.max_positions) * d,
        ParamGroup::Block(_) => block_count(config),
        ParamGroup::FinalLn => 2 * d,
        ParamGroup::Head => d * config.n_classes + config.n_classes,
    }
}

pub fn count_parameters(config: &ModelConfig) -> ParameterCounts {
    let d = config.d_model;
    let per_block = block_count(config);
    let token_embedding = config.vocab_size * d;
    let position_embedding = config.max_positions * d;
    let final_ln = 2 * d;
    let head = group_count(ParamGroup::Head, config);
    let backbone = token_embedding + position_embedding + config.n_layers * per_block + final_ln;
    ParameterCounts {
        token_embedding,
        position_embedding,
        per_block,
        final_ln,
        head,
        backbone,
        total: backbone + head,
    }
}
