use std::path::Path;

use gptft::model::{save_checkpoint, ParameterStore};

use crate::config::RunConfig;
use crate::error::CliResult;

/// Writes a seeded random initialization of the configured preset.
pub fn cmd_init(config: &RunConfig, output: &Path) -> CliResult {
    let model = config.model_config()?;
    let params = ParameterStore::init_random(&model, config.seed)?;
    save_checkpoint(&params, &model, output)?;
    Ok(())
}
