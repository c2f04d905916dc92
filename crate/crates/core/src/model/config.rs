use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters of a GPT-2 style classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub max_positions: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub layer_norm_eps: f64,
    pub n_classes: usize,
    #[serde(default)]
    pub dropout_rate: f64,
}

impl ModelConfig {
    /// The 124M-parameter GPT-2 small architecture with a binary head.
    pub fn gpt2_small() -> Self {
        ModelConfig {
            vocab_size: 50257,
            max_positions: 1024,
            n_layers: 12,
            n_heads: 12,
            d_model: 768,
            d_ff: 3072,
            layer_norm_eps: 1e-5,
            n_classes: 2,
            dropout_rate: 0.0,
        }
    }

    /// A two-block model over the 256 byte tokens, small enough for
    /// gradient checks and fast tests.
    pub fn toy() -> Self {
        ModelConfig {
            vocab_size: 256,
            max_positions: 64,
            n_layers: 2,
            n_heads: 2,
            d_model: 16,
            d_ff: 64,
            layer_norm_eps: 1e-5,
            n_classes: 2,
            dropout_rate: 0.0,
        }
    }

    /// Looks up a named preset (`gpt2-small` or `toy`).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "gpt2-small" => Ok(Self::gpt2_small()),
            "toy" => Ok(Self::toy()),
            _ => Err(Error::UnknownName {
                kind: "preset",
                name: name.to_string(),
                known: "gpt2-small, toy".into(),
            }),
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("max_positions", self.max_positions),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_model", self.d_model),
            ("d_ff", self.d_ff),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::InvalidConfig(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidConfig("n_classes must be at least 2".into()));
        }
        if !(self.layer_norm_eps >= 0.0 && self.layer_norm_eps.is_finite()) {
            return Err(Error::InvalidConfig("layer_norm_eps must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig("dropout_rate must be in [0, 1)".into()));
        }
        Ok(())
    }
}
