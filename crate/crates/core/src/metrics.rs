//! Classification metrics over logits, predictions and scores.

use crate::error::{Error, Result};

/// Index of the largest logit in each row of a row-major `[n, classes]`
/// matrix; ties resolve to the lowest index.
pub fn argmax_rows(logits: &[f32], classes: usize) -> Vec<usize> {
    logits
        .chunks_exact(classes)
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0, |best, (i, &v)| if v > row[best] { i } else { best })
        })
        .collect()
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(logits: &[f32], classes: usize, labels: &[usize]) -> Result<f64> {
    let preds = argmax_rows(logits, classes);
    check_lengths(preds.len(), labels.len())?;
    Ok(agreement(&preds, labels))
}

/// Fraction of predictions equal to their label.
pub fn agreement(preds: &[usize], labels: &[usize]) -> f64 {
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / preds.len() as f64
}

/// F1 of `positive`: `2PR/(P+R)`, zero when `P + R = 0`.
pub fn f1_score(preds: &[usize], labels: &[usize], positive: usize) -> Result<f64> {
    check_lengths(preds.len(), labels.len())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p == positive, l == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    Ok(if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    })
}

/// Area under the ROC curve in the Mann–Whitney form: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting half. `None` when either class is absent.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    check_lengths(scores.len(), labels.len())?;
    let mut negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(&s, _)| s)
        .collect();
    let n_neg = negatives.len() as u64;
    let n_pos = scores.len() as u64 - n_neg;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    negatives.sort_by(f64::total_cmp);
    // Twice the Mann–Whitney U keeps the half-counted ties integral.
    let mut twice_u = 0u64;
    for (&s, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        let below = negatives.partition_point(|&n| n < s) as u64;
        let not_above = negatives.partition_point(|&n| n <= s) as u64;
        twice_u += 2 * below + (not_above - below);
    }
    Ok(Some(twice_u as f64 / (2 * n_pos * n_neg) as f64))
}

/// Row-wise softmax probability of class `class`.
pub fn class_probability(logits: &[f32], classes: usize, class: usize) -> Vec<f64> {
    logits
        .chunks_exact(classes)
        .map(|row| {
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64));
            let denom: f64 = row.iter().map(|&v| (v as f64 - max).exp()).sum();
            (row[class] as f64 - max).exp() / denom
        })
        .collect()
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::EmptyInput("metric inputs"));
    }
    if a != b {
        return Err(Error::ShapeMismatch {
            op: "metric",
            lhs: vec![a],
            rhs: vec![b],
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force_auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
        let (mut twice, mut pairs) = (0u64, 0u64);
        for (&si, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
            for (&sj, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
                pairs += 1;
                twice += if si > sj { 2 } else if si == sj { 1 } else { 0 };
            }
        }
        (pairs > 0).then(|| twice as f64 / (2 * pairs) as f64)
    }

    #[test]
    fn accuracy_examples() {
        let logits = [2.0, 1.0, 0.0, 3.0, 1.0, 1.0];
        assert!((accuracy(&logits, 2, &[0, 1, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&logits, 2, &[0, 1, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&logits, 2, &[1, 0, 1]).unwrap(), 0.0);
        assert!(accuracy(&logits, 2, &[0]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(&[1, 0, 1], &[1, 0, 1], 1).unwrap(), 1.0);
        // TP=2, FP=1, FN=1.
        let f1 = f1_score(&[1, 1, 1, 0, 0], &[1, 1, 0, 1, 0], 1).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&[0, 0], &[0, 0], 1).unwrap(), 0.0);
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), Some(1.0));
        assert_eq!(auroc(&[0.5; 4], &[false, true, false, true]).unwrap(), Some(0.5));
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(), Some(0.75));
        assert_eq!(auroc(&[0.1, 0.4], &[true, true]).unwrap(), None);
        assert_eq!(auroc(&[0.1, 0.4], &[false, false]).unwrap(), None);
    }

    #[test]
    fn auroc_equals_pair_counting_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let n = rng.random_range(1..=200);
            // Coarse scores so ties are common.
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64 / 20.0).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            assert_eq!(auroc(&scores, &labels).unwrap(), brute_force_auroc(&scores, &labels));
        }
    }

    #[test]
    fn class_probability_is_softmax() {
        let p = class_probability(&[0.0, (3.0f32).ln(), 1000.0, 1000.0], 2, 1);
        assert!((p[0] - 0.75).abs() < 1e-7);
        assert_eq!(p[1], 0.5);
    }

    proptest! {
        #[test]
        fn accuracy_ignores_positive_rescaling(
            logits in prop::collection::vec(-5.0f32..5.0, 3..30),
            exponent in -8i32..8,
        ) {
            // Powers of two scale without rounding, so ties stay ties.
            let scale = 2f32.powi(exponent);
            let n = logits.len() / 3;
            let logits = &logits[..n * 3];
            let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
            let scaled: Vec<f32> = logits.iter().map(|v| v * scale).collect();
            prop_assert_eq!(argmax_rows(logits, 3), argmax_rows(&scaled, 3));
            prop_assert_eq!(accuracy(logits, 3, &labels).unwrap(), accuracy(&scaled, 3, &labels).unwrap());
        }
    }
}
