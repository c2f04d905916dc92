use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Standard deviation of the GPT-2 weight initializer.
pub const INIT_STD: f64 = 0.02;

/// GPT-2 initializes position embeddings at half the usual scale.
pub const POSITION_INIT_STD: f64 = 0.01;

/// Coarse location of a parameter in the network; strategies freeze and
/// unfreeze whole groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamGroup {
    Embeddings,
    Block(usize),
    FinalLn,
    Head,
}

/// How a fresh tensor is filled by [`ParameterStore::init_random`].
#[derive(Debug, Clone, Copy, PartialEq)]
enum Init {
    Normal(f64),
    Zeros,
    Ones,
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: String,
    pub group: ParamGroup,
    pub shape: Vec<usize>,
    init: Init,
}

impl ParamSpec {
    fn new(name: impl Into<String>, group: ParamGroup, shape: Vec<usize>, init: Init) -> Self {
        ParamSpec {
            name: name.into(),
            group,
            shape,
            init,
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Every parameter of the model in canonical (checkpoint) order.
pub fn param_specs(config: &ModelConfig) -> Vec<ParamSpec> {
    use Init::*;
    use ParamGroup::*;
    let (d, ff, c) = (config.d_model, config.d_ff, config.n_classes);
    let mut specs = vec![
        ParamSpec::new("token_embedding", Embeddings, vec![config.vocab_size, d], Normal(INIT_STD)),
        ParamSpec::new("position_embedding", Embeddings, vec![config.max_positions, d], Normal(POSITION_INIT_STD)),
    ];
    for i in 0..config.n_layers {
        let p = |s: &str| format!("blocks.{i}.{s}");
        let g = Block(i);
        specs.extend([
            ParamSpec::new(p("ln1.gamma"), g, vec![d], Ones),
            ParamSpec::new(p("ln1.beta"), g, vec![d], Zeros),
            ParamSpec::new(p("attn.qkv.weight"), g, vec![d, 3 * d], Normal(INIT_STD)),
            ParamSpec::new(p("attn.qkv.bias"), g, vec![3 * d], Zeros),
            ParamSpec::new(p("attn.proj.weight"), g, vec![d, d], Normal(INIT_STD)),
            ParamSpec::new(p("attn.proj.bias"), g, vec![d], Zeros),
            ParamSpec::new(p("ln2.gamma"), g, vec![d], Ones),
            ParamSpec::new(p("ln2.beta"), g, vec![d], Zeros),
            ParamSpec::new(p("mlp.fc.weight"), g, vec![d, ff], Normal(INIT_STD)),
            ParamSpec::new(p("mlp.fc.bias"), g, vec![ff], Zeros),
            ParamSpec::new(p("mlp.out.weight"), g, vec![ff, d], Normal(INIT_STD)),
            ParamSpec::new(p("mlp.out.bias"), g, vec![d], Zeros),
        ]);
    }
    specs.extend([
        ParamSpec::new("final_ln.gamma", FinalLn, vec![d], Ones),
        ParamSpec::new("final_ln.beta", FinalLn, vec![d], Zeros),
        ParamSpec::new("head.weight", Head, vec![d, c], Normal(INIT_STD)),
        ParamSpec::new("head.bias", Head, vec![c], Zeros),
    ]);
    specs
}

#[derive(Debug, Clone)]
pub struct Param<E: Element = f32> {
    pub name: String,
    pub group: ParamGroup,
    pub tensor: Tensor<E>,
}

/// Named model parameters in canonical order. The position of a parameter
/// in the store is its id; gradients on the tape are keyed by it.
#[derive(Debug, Clone)]
pub struct ParameterStore<E: Element = f32> {
    params: Vec<Param<E>>,
    index: HashMap<String, usize>,
}

impl<E: Element> ParameterStore<E> {
    /// Assembles a store from tensors given in canonical order, checking
    /// names and shapes against `config`. All tensors start trainable.
    pub fn from_tensors(config: &ModelConfig, tensors: Vec<Tensor<E>>) -> Result<Self> {
        let specs = param_specs(config);
        if tensors.len() != specs.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} tensors, got {}",
                specs.len(),
                tensors.len()
            )));
        }
        let params = specs
            .into_iter()
            .zip(tensors)
            .map(|(spec, tensor)| {
                if tensor.shape() != spec.shape.as_slice() {
                    return Err(Error::TensorShape {
                        name: spec.name,
                        expected: spec.shape,
                        found: tensor.shape().to_vec(),
                    });
                }
                Ok(Param {
                    name: spec.name,
                    group: spec.group,
                    tensor: tensor.with_requires_grad(true),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_params(params))
    }

    fn from_params(params: Vec<Param<E>>) -> Self {
        let index = params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
        ParameterStore { params, index }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<E>> {
        self.id(name).map(|i| &self.params[i].tensor)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<E>> {
        self.id(name).map(|i| &mut self.params[i].tensor)
    }

    /// Looks up a tensor that must exist by construction.
    pub(crate) fn expect(&self, name: &str) -> (usize, &Tensor<E>) {
        let id = self.id(name).unwrap_or_else(|| panic!("parameter `{name}` is missing"));
        (id, &self.params[id].tensor)
    }

    pub fn param(&self, id: usize) -> &Param<E> {
        &self.params[id]
    }

    pub fn param_mut(&mut self, id: usize) -> &mut Param<E> {
        &mut self.params[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<E>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<E>> {
        self.params.iter_mut()
    }

    pub fn total_count(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.params
            .iter()
            .filter(|p| p.tensor.requires_grad())
            .map(|p| p.tensor.numel())
            .sum()
    }

    /// Replaces the head with freshly initialized tensors.
    pub fn reset_head(&mut self, config: &ModelConfig, seed: u64) -> Result<()> {
        let (w, b) = init_head::<E>(config, seed)?;
        for (name, t) in [("head.weight", w), ("head.bias", b)] {
            let id = self.expect(name).0;
            let trainable = self.params[id].tensor.requires_grad();
            self.params[id].tensor = t.with_requires_grad(trainable);
        }
        Ok(())
    }

    /// Converts every tensor to another element type, keeping flags.
    pub fn cast<F: Element>(&self) -> ParameterStore<F> {
        ParameterStore::from_params(
            self.params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    group: p.group,
                    tensor: p.tensor.cast(),
                })
                .collect(),
        )
    }
}

impl ParameterStore {
    /// GPT-2 style initialization: weights and token embeddings from
    /// N(0, 0.02²), position embeddings from N(0, 0.01²), biases zero,
    /// LayerNorm scales one.
    pub fn init_random(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = param_specs(config)
            .iter()
            .map(|spec| {
                let n = spec.numel();
                let data = match spec.init {
                    Init::Normal(std) => {
                        let normal = Normal::new(0.0, std).expect("valid std");
                        (0..n).map(|_| normal.sample(&mut rng) as f32).collect()
                    }
                    Init::Zeros => vec![0.0; n],
                    Init::Ones => vec![1.0; n],
                };
                Tensor::new(spec.shape.clone(), data)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_tensors(config, tensors)
    }
}

/// Fresh classification head: `W_c ~ N(0, 0.02²)` of shape `[d_model, C]`
/// and a zero bias.
pub fn init_head<E: Element>(config: &ModelConfig, seed: u64) -> Result<(Tensor<E>, Tensor<E>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let n = config.d_model * config.n_classes;
    let w = (0..n).map(|_| E::of(normal.sample(&mut rng))).collect();
    Ok((
        Tensor::new(vec![config.d_model, config.n_classes], w)?,
        Tensor::zeros(vec![config.n_classes])?,
    ))
}
