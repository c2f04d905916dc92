use proptest::prelude::*;

use super::*;
use crate::model::param_specs;

fn registry() -> StrategyRegistry {
    StrategyRegistry::with_builtins()
}

#[test]
fn gpt2_small_counts_are_exact() {
    let config = ModelConfig::gpt2_small();
    let counts = count_parameters(&config);
    assert_eq!(counts.token_embedding, 38_597_376);
    assert_eq!(counts.position_embedding, 786_432);
    assert_eq!(counts.per_block, 7_087_872);
    assert_eq!(counts.final_ln, 1_536);
    assert_eq!(counts.head, 1_538);
    assert_eq!(counts.backbone, 124_439_808);
    assert_eq!(counts.total, 124_439_808 + 1_538);

    let r = registry();
    assert_eq!(counts.trainable(&*r.get("selective").unwrap(), &config), 7_090_946);
    assert_eq!(counts.trainable(&*r.get("head-only").unwrap(), &config), 1_538);
    assert_eq!(counts.trainable(&*r.get("full").unwrap(), &config), counts.total);
}

#[test]
fn selective_fraction_stays_below_six_percent() {
    let selective = SelectiveFinalBlock;
    for classes in 2..=50 {
        let config = ModelConfig {
            n_classes: classes,
            ..ModelConfig::gpt2_small()
        };
        let counts = count_parameters(&config);
        let fraction = counts.trainable(&selective, &config) as f64 / counts.total as f64;
        assert!(fraction < 0.06, "C={classes}: {fraction}");
    }
}

#[test]
fn apply_strategy_on_toy_store() {
    let config = ModelConfig::toy();
    let mut params = ParameterStore::init_random(&config, 0).unwrap();
    let counts = count_parameters(&config);
    assert_eq!(params.total_count(), counts.total);

    for name in registry().names() {
        let strategy = registry().get(name).unwrap();
        let part = apply_strategy(&mut params, &*strategy, &config);
        assert_eq!(part.total_count, counts.total);
        assert_eq!(part.trainable_count, counts.trainable(&*strategy, &config));
        assert_eq!(part.trainable_count, params.trainable_count());
        assert_eq!(part.trainable.len() + part.frozen.len(), params.len());
        assert!(part.trainable.iter().all(|n| !part.frozen.contains(n)));
        for p in params.iter() {
            assert_eq!(p.tensor.requires_grad(), part.trainable.contains(&p.name), "{}", p.name);
        }
        assert_eq!(part.summary().fraction, part.trainable_count as f64 / part.total_count as f64);
    }

    let part = apply_strategy(&mut params, &SelectiveFinalBlock, &config);
    assert!(part.trainable.iter().all(|n| n.starts_with("blocks.1.") || n.starts_with("final_ln.") || n.starts_with("head.")));
    assert!(part.frozen.contains(&"position_embedding".to_string()));
    assert_eq!(apply_strategy(&mut params, &HeadOnly, &config).trainable, ["head.weight", "head.bias"]);
}

#[test]
fn freezing_drops_gradient_accumulators() {
    let config = ModelConfig::toy();
    let mut params = ParameterStore::init_random(&config, 0).unwrap();
    for p in params.iter_mut() {
        p.tensor.zero_grad();
    }
    apply_strategy(&mut params, &HeadOnly, &config);
    for p in params.iter() {
        assert_eq!(p.tensor.grad().is_some(), p.group == ParamGroup::Head, "{}", p.name);
    }
}

#[test]
fn registry_lookup() {
    let r = registry();
    assert_eq!(r.names(), ["full", "head-only", "selective"]);
    match r.get("lora") {
        Err(Error::UnknownName { name, known, .. }) => {
            assert_eq!(name, "lora");
            assert_eq!(known, "full, head-only, selective");
        }
        other => panic!("expected unknown-name error, got {:?}", other.map(|s| s.name())),
    }
}

#[test]
fn custom_strategies_can_be_registered() {
    struct EmbeddingsOnly;
    impl FineTuneStrategy for EmbeddingsOnly {
        fn name(&self) -> &'static str {
            "embeddings"
        }
        fn description(&self) -> &'static str {
            "embedding tables only"
        }
        fn is_trainable(&self, group: ParamGroup, _: &ModelConfig) -> bool {
            group == ParamGroup::Embeddings
        }
    }
    let mut r = registry();
    r.register(std::sync::Arc::new(EmbeddingsOnly));
    let config = ModelConfig::toy();
    let s = r.get("embeddings").unwrap();
    assert_eq!(count_parameters(&config).trainable(&*s, &config), (256 + 64) * 16);
    // Gradients into the embeddings traverse the whole stack.
    assert_eq!(step_cost_estimate(8, &config, &*s).backward, step_cost_estimate(8, &config, &Full).backward);
}

#[test]
fn cost_model_laws() {
    let config = ModelConfig::gpt2_small();
    let short = step_cost_estimate(64, &config, &Full);
    let long = step_cost_estimate(128, &config, &Full);
    assert_eq!(long.attention, 4 * short.attention);
    assert_eq!(long.dense, 2 * short.dense);

    let full = step_cost_estimate(128, &config, &Full);
    let sel = step_cost_estimate(128, &config, &SelectiveFinalBlock);
    let head = step_cost_estimate(128, &config, &HeadOnly);
    assert_eq!(full.forward, sel.forward);
    let head_term = head.backward;
    let ratio = (sel.backward - head_term) as f64 / (full.backward - head_term) as f64;
    assert!((ratio - 1.0 / 12.0).abs() < 1e-12);
}

fn arb_config() -> impl Strategy<Value = ModelConfig> {
    (1usize..300, 1usize..40, 1usize..4, 1usize..4, 1usize..6, 1usize..40, 2usize..6).prop_map(
        |(vocab, positions, layers, heads, head_dim, ff, classes)| ModelConfig {
            vocab_size: vocab,
            max_positions: positions,
            n_layers: layers,
            n_heads: heads,
            d_model: heads * head_dim,
            d_ff: ff,
            layer_norm_eps: 1e-5,
            n_classes: classes,
            dropout_rate: 0.0,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn closed_form_counts_match_enumeration(config in arb_config()) {
        let specs = param_specs(&config);
        let brute: usize = specs.iter().map(|s| s.numel()).sum();
        let counts = count_parameters(&config);
        prop_assert_eq!(counts.total, brute);
        for g in [ParamGroup::Embeddings, ParamGroup::Block(0), ParamGroup::FinalLn, ParamGroup::Head] {
            let brute: usize = specs.iter().filter(|s| s.group == g).map(|s| s.numel()).sum();
            prop_assert_eq!(group_count(g, &config), brute);
        }
    }

    #[test]
    fn cost_is_monotone_across_strategies(config in arb_config(), t in 1usize..64) {
        let head = step_cost_estimate(t, &config, &HeadOnly).total();
        let sel = step_cost_estimate(t, &config, &SelectiveFinalBlock).total();
        let full = step_cost_estimate(t, &config, &Full).total();
        prop_assert!(head < sel);
        prop_assert!(sel <= full);
        if config.n_layers > 1 {
            prop_assert!(sel < full);
        }
    }
}
