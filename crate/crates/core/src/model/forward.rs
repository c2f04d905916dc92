use rand::RngCore;

use super::{ModelConfig, ParameterStore};
use crate::error::{Error, Result};
use crate::tensor::{Element, Tape, Var};
use crate::tokenizer::EncodedBatch;

fn param<E: Element>(tape: &mut Tape<E>, params: &ParameterStore<E>, name: &str) -> Var {
    let (id, t) = params.expect(name);
    tape.param(id, t)
}

/// Runs the decoder stack and returns the final-LayerNorm hidden states,
/// shaped `[batch, seq, d_model]`.
///
/// Dropout is applied only when `config.dropout_rate > 0` and an RNG is
/// supplied; evaluation passes `None`.
pub fn forward<E: Element>(
    tape: &mut Tape<E>,
    params: &ParameterStore<E>,
    batch: &EncodedBatch,
    config: &ModelConfig,
    mut dropout: Option<&mut dyn RngCore>,
) -> Result<Var> {
    let (b, t, d) = (batch.batch, batch.seq, config.d_model);
    if t > config.max_positions {
        return Err(Error::SequenceTooLong {
            len: t,
            max: config.max_positions,
        });
    }
    let mut tokens = Vec::with_capacity(b * t);
    for &id in &batch.token_ids {
        if id as usize >= config.vocab_size {
            return Err(Error::TokenOutOfRange {
                id,
                vocab: config.vocab_size,
            });
        }
        tokens.push(id as usize);
    }
    let positions: Vec<usize> = (0..b).flat_map(|_| 0..t).collect();

    let wte = param(tape, params, "token_embedding");
    let wpe = param(tape, params, "position_embedding");
    let tok = tape.gather_rows(wte, &tokens)?;
    let pos = tape.gather_rows(wpe, &positions)?;
    let mut x = tape.add(tok, pos)?;

    let eps = config.layer_norm_eps;
    let rate = config.dropout_rate;
    for i in 0..config.n_layers {
        let mut p = |s: &str| param(tape, params, &format!("blocks.{i}.{s}"));
        let ln1 = (p("ln1.gamma"), p("ln1.beta"));
        let qkv_w = p("attn.qkv.weight");
        let qkv_b = p("attn.qkv.bias");
        let proj_w = p("attn.proj.weight");
        let proj_b = p("attn.proj.bias");
        let ln2 = (p("ln2.gamma"), p("ln2.beta"));
        let fc_w = p("mlp.fc.weight");
        let fc_b = p("mlp.fc.bias");
        let out_w = p("mlp.out.weight");
        let out_b = p("mlp.out.bias");

        let h = tape.layer_norm(x, ln1.0, ln1.1, eps)?;
        let qkv = tape.matmul(h, qkv_w)?;
        let qkv = tape.add_bias(qkv, qkv_b)?;
        let a = tape.causal_attention(qkv, &batch.attention_mask, b, t, config.n_heads)?;
        let a = tape.matmul(a, proj_w)?;
        let mut a = tape.add_bias(a, proj_b)?;
        if let (true, Some(rng)) = (rate > 0.0, dropout.as_deref_mut()) {
            a = tape.dropout(a, rate, rng);
        }
        x = tape.add(x, a)?;

        let h = tape.layer_norm(x, ln2.0, ln2.1, eps)?;
        let h = tape.matmul(h, fc_w)?;
        let h = tape.add_bias(h, fc_b)?;
        let h = tape.gelu(h);
        let h = tape.matmul(h, out_w)?;
        let mut m = tape.add_bias(h, out_b)?;
        if let (true, Some(rng)) = (rate > 0.0, dropout.as_deref_mut()) {
            m = tape.dropout(m, rate, rng);
        }
        x = tape.add(x, m)?;
    }
    let gamma = param(tape, params, "final_ln.gamma");
    let beta = param(tape, params, "final_ln.beta");
    let x = tape.layer_norm(x, gamma, beta, eps)?;
    tape.reshape(x, vec![b, t, d])
}

/// Picks each row's hidden state at its last non-padding position,
/// returning `[batch, d_model]`.
pub fn last_token_representation<E: Element>(
    tape: &mut Tape<E>,
    hidden: Var,
    batch: &EncodedBatch,
) -> Result<Var> {
    let shape = tape.shape(hidden).to_vec();
    if shape.len() != 3 || shape[0] != batch.batch || shape[1] != batch.seq {
        return Err(Error::InvalidShape {
            op: "last_token_representation",
            shape,
            reason: format!("expected [{}, {}, d]", batch.batch, batch.seq),
        });
    }
    if let Some(&bad) = batch.last_index.iter().find(|&&i| i >= batch.seq) {
        return Err(Error::InvalidShape {
            op: "last_token_representation",
            shape,
            reason: format!("last index {bad} outside sequence length {}", batch.seq),
        });
    }
    let rows: Vec<usize> = batch
        .last_index
        .iter()
        .enumerate()
        .map(|(row, &i)| row * batch.seq + i)
        .collect();
    tape.gather_rows(hidden, &rows)
}

/// Affine classification head `h·W_c + b_c`, returning `[batch, C]`.
pub fn classify<E: Element>(tape: &mut Tape<E>, h: Var, params: &ParameterStore<E>) -> Result<Var> {
    let w = param(tape, params, "head.weight");
    let bias = param(tape, params, "head.bias");
    let z = tape.matmul(h, w)?;
    tape.add_bias(z, bias)
}

/// Forward pass through to class logits.
pub fn logits<E: Element>(
    tape: &mut Tape<E>,
    params: &ParameterStore<E>,
    batch: &EncodedBatch,
    config: &ModelConfig,
    dropout: Option<&mut dyn RngCore>,
) -> Result<Var> {
    let hidden = forward(tape, params, batch, config, dropout)?;
    let h = last_token_representation(tape, hidden, batch)?;
    classify(tape, h, params)
}
