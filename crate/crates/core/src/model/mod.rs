//! GPT-2 decoder stack with a classification head on the last real token.

mod checkpoint;
mod config;
mod forward;
mod params;

pub use checkpoint::{
    load_backbone, load_checkpoint, read_metadata, save_checkpoint, Metadata, TensorEntry, MAGIC, VERSION,
};
pub use config::ModelConfig;
pub use forward::{classify, forward, last_token_representation, logits};
pub use params::{init_head, param_specs, Param, ParamGroup, ParamSpec, ParameterStore, INIT_STD, POSITION_INIT_STD};
