//! Fine-tuning strategies: which parameter groups train and which stay
//! frozen. Strategies are trait objects registered by name so new ones can
//! be added without touching the trainer.

mod cost;
mod counts;

pub use cost::{step_cost_estimate, StepCost};
pub use counts::{count_parameters, group_count, ParameterCounts};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ParamGroup, ParameterStore};
use crate::tensor::Element;

/// Decides, per parameter group, whether a tensor is trained.
pub trait FineTuneStrategy: Send + Sync {
    /// Name used on the command line and in reports.
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn is_trainable(&self, group: ParamGroup, config: &ModelConfig) -> bool;
}

/// Trains only the classification head.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeadOnly;

/// Trains the last Transformer block, the final LayerNorm and the head.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelectiveFinalBlock;

/// Trains every parameter, embeddings included.
#[derive(Debug, Clone, Copy, Default)]
pub struct Full;

impl FineTuneStrategy for HeadOnly {
    fn name(&self) -> &'static str {
        "head-only"
    }

    fn description(&self) -> &'static str {
        "classification head only"
    }

    fn is_trainable(&self, group: ParamGroup, _: &ModelConfig) -> bool {
        group == ParamGroup::Head
    }
}

impl FineTuneStrategy for SelectiveFinalBlock {
    fn name(&self) -> &'static str {
        "selective"
    }

    fn description(&self) -> &'static str {
        "final block, final LayerNorm and classification head"
    }

    fn is_trainable(&self, group: ParamGroup, config: &ModelConfig) -> bool {
        match group {
            ParamGroup::Embeddings => false,
            ParamGroup::Block(i) => i + 1 == config.n_layers,
            ParamGroup::FinalLn | ParamGroup::Head => true,
        }
    }
}

impl FineTuneStrategy for Full {
    fn name(&self) -> &'static str {
        "full"
    }

    fn description(&self) -> &'static str {
        "all parameters"
    }

    fn is_trainable(&self, _: ParamGroup, _: &ModelConfig) -> bool {
        true
    }
}

/// Strategies available by name.
#[derive(Clone, Default)]
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Arc<dyn FineTuneStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut registry = Self::new();
        registry.register(Arc::new(HeadOnly));
        registry.register(Arc::new(SelectiveFinalBlock));
        registry.register(Arc::new(Full));
        registry
    }

    /// Adds a strategy, replacing any previous one with the same name.
    pub fn register(&mut self, strategy: Arc<dyn FineTuneStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn FineTuneStrategy>> {
        self.strategies.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "strategy",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

/// Counts of a frozen/trainable split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub trainable_count: usize,
    pub total_count: usize,
    pub fraction: f64,
}

/// The result of applying a strategy to a store.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPartition {
    pub trainable: Vec<String>,
    pub frozen: Vec<String>,
    pub trainable_count: usize,
    pub total_count: usize,
    pub trainable_fraction: f64,
}

impl ParamPartition {
    pub fn summary(&self) -> PartitionSummary {
        PartitionSummary {
            trainable_count: self.trainable_count,
            total_count: self.total_count,
            fraction: self.trainable_fraction,
        }
    }
}

/// Sets every tensor's trainable flag according to `strategy`. Frozen
/// tensors lose any gradient accumulator.
pub fn apply_strategy<E: Element>(
    params: &mut ParameterStore<E>,
    strategy: &dyn FineTuneStrategy,
    config: &ModelConfig,
) -> ParamPartition {
    let mut partition = ParamPartition {
        trainable: Vec::new(),
        frozen: Vec::new(),
        trainable_count: 0,
        total_count: 0,
        trainable_fraction: 0.0,
    };
    for p in params.iter_mut() {
        let trainable = strategy.is_trainable(p.group, config);
        p.tensor.set_requires_grad(trainable);
        partition.total_count += p.tensor.numel();
        if trainable {
            partition.trainable_count += p.tensor.numel();
            partition.trainable.push(p.name.clone());
        } else {
            partition.frozen.push(p.name.clone());
        }
    }
    partition.trainable_fraction = partition.trainable_count as f64 / partition.total_count as f64;
    partition
}

#[cfg(test)]
mod tests;
