//! Central finite-difference check of model gradients.

use crate::error::Result;
use crate::model::{logits, ModelConfig, ParameterStore};
use crate::tensor::{Element, Tape};
use crate::tokenizer::EncodedBatch;

/// Agreement between autodiff and finite differences for one tensor.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: String,
    pub numel: usize,
    /// `‖ad − fd‖₂ / max(‖ad‖₂, ‖fd‖₂)`; zero when both vanish.
    pub rel_err: f64,
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn loss<E: Element>(params: &ParameterStore<E>, batch: &EncodedBatch, config: &ModelConfig) -> Result<f64> {
    let mut tape = Tape::no_grad();
    let z = logits(&mut tape, params, batch, config, None)?;
    let l = tape.cross_entropy(z, &batch.labels)?;
    Ok(tape.value(l)[0].as_f64())
}

/// Compares the cross-entropy gradient of every trainable tensor, computed
/// by autodiff in the store's precision, against central differences with
/// step `step`. The differences are evaluated in f64 on the same parameter
/// values: in f32 their rounding noise alone exceeds the gradients of a
/// freshly initialized model. Dropout is disabled.
pub fn check_model_gradients<E: Element>(
    params: &ParameterStore<E>,
    batch: &EncodedBatch,
    config: &ModelConfig,
    step: f64,
) -> Result<Vec<TensorCheck>> {
    let config = ModelConfig {
        dropout_rate: 0.0,
        ..config.clone()
    };
    let mut tape = Tape::new();
    let z = logits(&mut tape, params, batch, &config, None)?;
    let l = tape.cross_entropy(z, &batch.labels)?;
    let grads = tape.backward(l)?;

    let mut probe = params.cast::<f64>();
    let mut out = Vec::new();
    for id in 0..params.len() {
        let p = params.param(id);
        if !p.tensor.requires_grad() {
            continue;
        }
        let n = p.tensor.numel();
        let ad: Vec<f64> = grads
            .iter()
            .find(|g| g.key == Some(id))
            .map(|g| g.grad.iter().map(|v| v.as_f64()).collect())
            .unwrap_or_else(|| vec![0.0; n]);
        let mut fd = Vec::with_capacity(n);
        for j in 0..n {
            let base = p.tensor.data()[j].as_f64();
            probe.param_mut(id).tensor.data_mut()[j] = base + step;
            let up = loss(&probe, batch, &config)?;
            probe.param_mut(id).tensor.data_mut()[j] = base - step;
            let down = loss(&probe, batch, &config)?;
            probe.param_mut(id).tensor.data_mut()[j] = base;
            fd.push((up - down) / (2.0 * step));
        }
        out.push(TensorCheck {
            name: p.name.clone(),
            numel: n,
            rel_err: rel_err(&ad, &fd),
        });
    }
    Ok(out)
}
