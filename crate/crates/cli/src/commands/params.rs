use std::fmt::Write as _;

use gptft::model::ModelConfig;
use gptft::strategy::{count_parameters, FineTuneStrategy, StrategyRegistry};

use crate::config::RunConfig;
use crate::error::CliResult;

/// Closed-form parameter accounting; allocates no tensors.
pub fn params_table(preset: &str, model: &ModelConfig, strategy: &dyn FineTuneStrategy) -> String {
    let counts = count_parameters(model);
    let trainable = counts.trainable(strategy, model);
    let mut s = String::new();
    let mut row = |k: &str, v: String| writeln!(s, "{k}\t{v}").expect("writing to a String");
    row("preset", preset.to_string());
    row("strategy", strategy.name().to_string());
    row("token_embedding", counts.token_embedding.to_string());
    row("position_embedding", counts.position_embedding.to_string());
    row("per_block", counts.per_block.to_string());
    row("blocks", model.n_layers.to_string());
    row("final_ln", counts.final_ln.to_string());
    row("head", counts.head.to_string());
    row("pretrained_total", counts.backbone.to_string());
    row("total", counts.total.to_string());
    row("trainable", trainable.to_string());
    row("frozen", (counts.total - trainable).to_string());
    row("fraction", format!("{:.3}%", 100.0 * trainable as f64 / counts.total as f64));
    s
}

pub fn cmd_params(config: &RunConfig) -> CliResult<String> {
    let model = config.model_config()?;
    let strategy = StrategyRegistry::with_builtins().get(&config.strategy)?;
    Ok(params_table(&config.preset, &model, &*strategy))
}
