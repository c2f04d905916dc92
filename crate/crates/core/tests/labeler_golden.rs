use std::collections::BTreeMap;

use gptft::labeler::{binarize, corpus_stats, label_report, MentionLabel, RuleSet};
use serde::Deserialize;

#[derive(Deserialize)]
struct GoldenReport {
    doc_id: String,
    text: String,
    /// Conditions not listed are expected to be missing.
    expected: BTreeMap<String, MentionLabel>,
    label: usize,
}

fn golden() -> Vec<GoldenReport> {
    include_str!("fixtures/labeler/golden_reports.jsonl")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn golden_reports_agree_on_every_condition() {
    let rules = RuleSet::builtin();
    let reports = golden();
    assert_eq!(reports.len(), 20);
    let mut disagreements = Vec::new();
    for r in &reports {
        for name in r.expected.keys() {
            assert!(rules.conditions.iter().any(|c| &c.name == name), "{}: unknown condition {name}", r.doc_id);
        }
        let labels = label_report(&r.text, &rules);
        for c in &labels {
            let want = r.expected.get(&c.condition).copied().unwrap_or(MentionLabel::Missing);
            if c.label != want {
                disagreements.push(format!("{} {}: got {:?}, want {want:?}", r.doc_id, c.condition, c.label));
            }
        }
        if binarize(&labels) != r.label {
            disagreements.push(format!("{} binary target", r.doc_id));
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:#?}");
}

#[test]
fn golden_distribution_matches_stored_counts() {
    #[derive(Deserialize)]
    struct Expected {
        total: usize,
        positive_or_uncertain: usize,
        negative: usize,
    }
    let want: Expected = serde_json::from_str(include_str!("fixtures/labeler/expected_stats.json")).unwrap();
    let rules = RuleSet::builtin();
    let stats = corpus_stats(golden().iter().map(|r| binarize(&label_report(&r.text, &rules)))).unwrap();
    assert_eq!(
        (stats.total, stats.positive_or_uncertain, stats.negative),
        (want.total, want.positive_or_uncertain, want.negative)
    );
}
