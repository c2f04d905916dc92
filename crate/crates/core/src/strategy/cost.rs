use serde::Serialize;

use super::FineTuneStrategy;
use crate::model::{ModelConfig, ParamGroup};

/// Symbolic multiply-add counts for one training step on one sequence.
/// These order strategies by work; they do not predict wall time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepCost {
    /// Attention score and mixing terms, `L·4·T²·d`.
    pub attention: u128,
    /// Dense projections and feed-forward, `L·(8·T·d² + 4·T·d·d_ff)`.
    pub dense: u128,
    pub forward: u128,
    pub backward: u128,
}

impl StepCost {
    pub fn total(&self) -> u128 {
        self.forward + self.backward
    }
}

/// Cost of a forward and backward pass over a length-`t` sequence.
///
/// Backward work is about twice the forward work of every block the
/// gradient has to traverse: from the output down to the earliest block
/// holding a trainable tensor (all blocks when embeddings train).
pub fn step_cost_estimate(t: usize, config: &ModelConfig, strategy: &dyn FineTuneStrategy) -> StepCost {
    let (t, d, ff) = (t as u128, config.d_model as u128, config.d_ff as u128);
    let layers = config.n_layers as u128;
    let attention_block = 4 * t * t * d;
    let dense_block = 8 * t * d * d + 4 * t * d * ff;
    let block = attention_block + dense_block;
    let head = 2 * d * config.n_classes as u128;

    let first_trainable = if strategy.is_trainable(ParamGroup::Embeddings, config) {
        Some(0)
    } else {
        (0..config.n_layers).find(|&i| strategy.is_trainable(ParamGroup::Block(i), config))
    };
    let backward_blocks = first_trainable.map_or(0, |i| config.n_layers - i) as u128;

    StepCost {
        attention: layers * attention_block,
        dense: layers * dense_block,
        forward: layers * block + head,
        backward: 2 * (backward_blocks * block + head),
    }
}
