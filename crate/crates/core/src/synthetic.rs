//! Seeded keyword-detection corpus: class-1 documents contain one of a few
//! signal words, class-0 documents do not. Filler words are spelled from
//! a small alphabet that shares no letter with any signal word, so the task
//! is separable even for a byte-level model with frozen embeddings.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trainer::Example;

pub const SIGNAL_WORDS: [&str; 5] = ["buzz", "fuzz", "jumpy", "pygmy", "chump"];

/// Every letter used by the filler words.
pub const FILLER_ALPHABET: &str = "adeilnorst";

const FILLER: [&str; 29] = [
    "no", "lesion", "is", "seen", "at", "rest", "stent", "in", "site", "nasal", "tail", "lateral",
    "line", "tone", "rotation", "still", "stone", "saline", "retention", "so", "on", "to", "or",
    "nine", "start", "later", "slit", "noted", "listen",
];

/// `n` documents of 3 to 6 filler words, labels alternating so classes balance;
/// class-1 documents carry exactly one signal word at a random position.
pub fn keyword_corpus(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let len = rng.random_range(3..=6);
            let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(&mut rng).expect("nonempty")).collect();
            if label == 1 {
                let at = rng.random_range(0..=len);
                words.insert(at, SIGNAL_WORDS.choose(&mut rng).expect("nonempty"));
            }
            Example {
                doc_id: format!("syn-{i:04}"),
                text: words.join(" "),
                label,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filler_and_signal_alphabets_are_disjoint() {
        for f in FILLER {
            assert!(f.chars().all(|c| FILLER_ALPHABET.contains(c)), "{f}");
        }
        for w in SIGNAL_WORDS {
            assert!(!w.contains(|c| FILLER_ALPHABET.contains(c)), "{w}");
        }
    }

    #[test]
    fn corpus_is_seeded_balanced_and_labelled_by_keyword() {
        let docs = keyword_corpus(400, 1);
        assert_eq!(docs, keyword_corpus(400, 1));
        assert_ne!(docs, keyword_corpus(400, 2));
        assert_eq!(docs.iter().filter(|d| d.label == 1).count(), 200);
        for d in &docs {
            let has = SIGNAL_WORDS.iter().any(|w| d.text.split(' ').any(|t| t == *w));
            assert_eq!(has, d.label == 1, "{}", d.text);
        }
    }
}
