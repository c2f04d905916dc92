//! Selective fine-tuning of GPT-2 style decoders for text classification.

pub mod error;
pub mod gradcheck;
pub mod labeler;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod strategy;
pub mod synthetic;
pub mod tensor;
pub mod tokenizer;
pub mod trainer;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
