use proptest::prelude::*;

use super::*;

fn label_of(text: &str, condition: &str) -> MentionLabel {
    label_report(text, &RuleSet::builtin())
        .into_iter()
        .find(|c| c.condition == condition)
        .unwrap_or_else(|| panic!("no condition {condition}"))
        .label
}

fn labels(pairs: &[(&str, MentionLabel)]) -> Vec<ConditionLabel> {
    pairs
        .iter()
        .map(|&(name, label)| ConditionLabel {
            condition: name.into(),
            label,
            target: name != "No Finding",
        })
        .collect()
}

#[test]
fn builtin_rules_define_fourteen_conditions() {
    let rules = RuleSet::builtin();
    assert_eq!(rules.conditions.len(), 14);
    assert_eq!(rules.negation.window, 6);
    assert_eq!(rules.uncertainty.window, 6);
    let untargeted: Vec<_> = rules.conditions.iter().filter(|c| !c.target).map(|c| c.name.as_str()).collect();
    assert_eq!(untargeted, ["No Finding"]);
}

#[test]
fn worked_examples() {
    use MentionLabel::*;
    assert_eq!(label_of("No evidence of pneumonia.", "Pneumonia"), Negative);
    assert_eq!(label_of("Findings possibly representing pneumonia.", "Pneumonia"), Uncertain);
    let text = "No pleural effusion. Right lower lobe pneumonia.";
    assert_eq!(label_of(text, "Pleural Effusion"), Negative);
    assert_eq!(label_of(text, "Pneumonia"), Positive);
}

#[test]
fn empty_text_is_all_missing() {
    let out = label_report("", &RuleSet::builtin());
    assert_eq!(out.len(), 14);
    assert!(out.iter().all(|c| c.label == MentionLabel::Missing));
    assert_eq!(binarize(&out), 0);
}

#[test]
fn scope_window_and_terminators() {
    use MentionLabel::*;
    // Mention starts exactly 6 tokens after the cue: in scope; 7: out.
    assert_eq!(label_of("no a b c d e pneumothorax", "Pneumothorax"), Negative);
    assert_eq!(label_of("no a b c d e f pneumothorax", "Pneumothorax"), Positive);
    assert_eq!(label_of("no effusion but pneumothorax", "Pneumothorax"), Positive);
    assert_eq!(label_of("no effusion but pneumothorax", "Pleural Effusion"), Negative);
    assert_eq!(label_of("no effusion! pneumothorax", "Pneumothorax"), Positive);
    assert_eq!(label_of("no effusion? pneumothorax", "Pneumothorax"), Positive);
    // A decimal point is not a sentence boundary.
    assert_eq!(label_of("no 2.5 cm nodule", "Lung Lesion"), Negative);
    assert_eq!(label_of("no 2. nodule", "Lung Lesion"), Positive);
    // Cues follow no mention: a cue after the phrase has no effect.
    assert_eq!(label_of("pneumonia is possible", "Pneumonia"), Positive);
}

#[test]
fn negation_beats_uncertainty_within_one_mention() {
    assert_eq!(label_of("no possible pneumonia", "Pneumonia"), MentionLabel::Negative);
    assert_eq!(label_of("possible no pneumonia", "Pneumonia"), MentionLabel::Negative);
}

#[test]
fn aggregation_prefers_positive_then_uncertain() {
    use MentionLabel::*;
    assert_eq!(label_of("No edema. Edema is present.", "Edema"), Positive);
    assert_eq!(label_of("No edema. Possible edema.", "Edema"), Uncertain);
    assert_eq!(label_of("No edema. No pulmonary edema.", "Edema"), Negative);
}

#[test]
fn phrases_match_whole_contiguous_words() {
    use MentionLabel::*;
    assert_eq!(label_of("Cardiomegalyish contour.", "Cardiomegaly"), Missing);
    assert_eq!(label_of("pleural, effusion", "Pleural Effusion"), Positive);
    assert_eq!(label_of("PLEURAL EFFUSION", "Pleural Effusion"), Positive);
    assert_eq!(label_of("heart enlarged", "Cardiomegaly"), Missing);
}

#[test]
fn binarize_groups_uncertain_with_positive() {
    use MentionLabel::*;
    let all_missing = labels(&[("Edema", Missing), ("Fracture", Missing)]);
    assert_eq!(binarize(&all_missing), 0);
    let one_uncertain = labels(&[("Edema", Uncertain), ("Fracture", Negative), ("Pneumonia", Negative)]);
    assert_eq!(binarize(&one_uncertain), 1);
    let names = RuleSet::builtin().conditions.into_iter().map(|c| c.name).collect::<Vec<_>>();
    let all_negative: Vec<_> = names.iter().map(|n| (n.as_str(), Negative)).collect();
    assert_eq!(binarize(&labels(&all_negative)), 0);
    assert_eq!(binarize(&labels(&[("No Finding", Positive)])), 0);
}

#[test]
fn corpus_stats_counts_and_fractions() {
    let s = corpus_stats([1, 0, 0]).unwrap();
    assert_eq!((s.total, s.positive_or_uncertain, s.negative), (3, 1, 2));
    assert!((s.positive_fraction - 1.0 / 3.0).abs() < 1e-12);
    assert!((s.negative_fraction - 2.0 / 3.0).abs() < 1e-12);
    assert!(s.to_string().contains("33.3%"));
    assert!(s.to_string().contains("66.7%"));
    assert!(matches!(corpus_stats([]), Err(Error::EmptyInput(_))));
}

#[test]
fn labeled_document_serializes_in_rule_order() {
    let doc = LabeledDocument::label("r1", "Possible pneumonia.", &RuleSet::builtin());
    assert_eq!(doc.binary_target, 1);
    let json = serde_json::to_string(&doc).unwrap();
    assert!(json.starts_with(r#"{"doc_id":"r1","text":"Possible pneumonia.","label":1,"conditions":{"No Finding":"missing","#));
    assert!(json.contains(r#""Pneumonia":"uncertain""#));
    assert_eq!(doc.to_example().label, 1);
}

fn rules_with(extra: &str) -> String {
    let mut s = String::new();
    for i in 0..14 {
        s += &format!("[condition \"c{i}\"]\nphrase = p{i}\n");
    }
    s + "[negation]\nwindow = 2\ncue = no\n[uncertainty]\nwindow = 1\ncue = maybe\n" + extra
}

#[test]
fn parser_accepts_minimal_rules() {
    let r = RuleSet::parse(&rules_with("")).unwrap();
    assert_eq!(r.negation.window, 2);
    assert_eq!(r.uncertainty.cues, vec![vec!["maybe".to_string()]]);
    assert_eq!(r.conditions[3].phrases, vec![vec!["p3".to_string()]]);
}

#[test]
fn parser_rejects_invalid_rules() {
    let bad = |text: &str, needle: &str| {
        let err = RuleSet::parse(text).unwrap_err().to_string();
        assert!(err.contains(needle), "{err}");
    };
    bad(&rules_with("[condition \"c0\"]\nphrase = x\n"), "defined twice");
    bad(&rules_with("[negation]\nwindow = 0\n"), "positive integer");
    bad(&rules_with("[bogus]\n"), "unknown section");
    bad(&rules_with("[uncertainty]\ncue = ,,\n"), "no words");
    bad(&rules_with("[negation]\nphrase = x\n"), "unexpected key");
    bad(&rules_with("[condition \"c99\"]\n"), "expected 14 conditions");
    bad("phrase = x\n", "outside any section");
    bad(&rules_with("[condition \"c0\"\n"), "lacks `]`");
    let no_uncertainty = rules_with("").replace("[uncertainty]\nwindow = 1\ncue = maybe\n", "");
    bad(&no_uncertainty, "missing `[uncertainty]`");
    let empty = rules_with("").replace("phrase = p5\n", "");
    bad(&empty, "`c5` has no phrases");
    bad(&rules_with("").replace("window = 2\n", ""), "has no window");
    bad(&rules_with("[condition \"c13\"]\ntarget = maybe\n").replace("[condition \"c13\"]\nphrase = p13\n", ""), "target must be");
}

const VOCAB: [&str; 16] = [
    "no", "possible", "pneumonia", "edema", "effusion", "pleural", "but", ".", "the", "left", "may",
    "without", "nodule", "2.5", "fracture", "is",
];

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(&VOCAB[..]), 0..30).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn labeling_is_deterministic(text in text_strategy()) {
        let rules = RuleSet::builtin();
        prop_assert_eq!(label_report(&text, &rules), label_report(&text, &rules));
    }

    #[test]
    fn appending_a_positive_mention_never_lowers_a_label(text in text_strategy()) {
        let rules = RuleSet::builtin();
        let before = label_report(&text, &rules);
        let after = label_report(&format!("{text}. pneumonia"), &rules);
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(a.label >= b.label);
        }
        prop_assert_eq!(after.iter().find(|c| c.condition == "Pneumonia").unwrap().label, MentionLabel::Positive);
    }

    #[test]
    fn binarize_ignores_condition_order(text in text_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut l = label_report(&text, &RuleSet::builtin());
        let before = binarize(&l);
        l.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(binarize(&l), before);
    }
}
