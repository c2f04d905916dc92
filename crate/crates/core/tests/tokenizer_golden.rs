//! Encodings checked against fixtures produced by reference GPT-2 tokenizers
//! (see `scripts/make_tokenizer_fixtures.py`).

use std::path::{Path, PathBuf};

use gptft::tokenizer::{encode_batch, BpeVocab};
use serde_json::Value;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tokenizer")
}

fn load() -> (BpeVocab, Value) {
    let dir = fixture_dir();
    let vocab = BpeVocab::from_files(dir.join("vocab.json"), dir.join("merges.txt")).unwrap();
    let golden = serde_json::from_str(&std::fs::read_to_string(dir.join("golden.json")).unwrap()).unwrap();
    (vocab, golden)
}

fn ids(v: &Value) -> Vec<u32> {
    v.as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as u32).collect()
}

#[test]
fn encodings_match_reference() {
    let (vocab, golden) = load();
    for case in golden["encodings"].as_array().unwrap() {
        let text = case["text"].as_str().unwrap();
        assert_eq!(vocab.encode(text), ids(&case["ids"]), "text {text:?}");
        assert_eq!(vocab.decode(&vocab.encode(text)), text);
    }
}

#[test]
fn golden_batch_matches_reference() {
    let (vocab, golden) = load();
    let batch = &golden["batch"];
    let texts: Vec<&str> = batch["texts"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    let max_len = batch["max_len"].as_u64().unwrap() as usize;
    let labels = vec![0; texts.len()];
    let encoded = encode_batch(&texts, &labels, max_len, &vocab).unwrap();
    assert_eq!(vocab.pad_id() as u64, batch["pad_id"].as_u64().unwrap());
    for (row, expected) in batch["token_ids"].as_array().unwrap().iter().enumerate() {
        assert_eq!(encoded.row_ids(row), ids(expected).as_slice());
    }
    for (row, expected) in batch["attention_mask"].as_array().unwrap().iter().enumerate() {
        let mask: Vec<u8> = ids(expected).into_iter().map(|m| m as u8).collect();
        assert_eq!(encoded.row_mask(row), mask.as_slice());
    }
    let last: Vec<usize> = ids(&batch["last_index"]).into_iter().map(|x| x as usize).collect();
    assert_eq!(encoded.last_index, last);
}

/// Runs only when `GPT2_TOKENIZER_DIR` points at the published
/// `vocab.json` / `merges.txt` pair.
#[test]
fn published_gpt2_vocabulary() {
    let Ok(dir) = std::env::var("GPT2_TOKENIZER_DIR") else {
        eprintln!("GPT2_TOKENIZER_DIR not set; skipping");
        return;
    };
    let dir = PathBuf::from(dir);
    let vocab = BpeVocab::from_files(dir.join("vocab.json"), dir.join("merges.txt")).unwrap();
    assert_eq!(vocab.vocab_size(), 50257);
    assert_eq!(vocab.pad_id(), 50256);
    assert_eq!(vocab.encode("Hello world"), vec![15496, 995]);
}
