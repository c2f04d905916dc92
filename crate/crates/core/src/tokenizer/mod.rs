//! Byte-level BPE compatible with the published GPT-2 `vocab.json` and
//! `merges.txt` files, plus fixed-length batch encoding.

mod batch;
mod pretokenize;

pub use batch::{encode_batch, EncodedBatch, DEFAULT_MAX_LEN};
pub use pretokenize::pretokenize;

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// End-of-text marker in the GPT-2 vocabulary; doubles as the pad token.
pub const END_OF_TEXT: &str = "<|endoftext|>";

/// An immutable byte-level BPE vocabulary.
#[derive(Debug, Clone)]
pub struct BpeVocab {
    encoder: HashMap<String, u32>,
    decoder: Vec<String>,
    ranks: HashMap<(String, String), usize>,
    byte_encoder: [char; 256],
    byte_decoder: HashMap<char, u8>,
}

impl BpeVocab {
    /// Loads a vocabulary from the standard GPT-2 file pair.
    pub fn from_files(vocab: impl AsRef<Path>, merges: impl AsRef<Path>) -> Result<Self> {
        let (vocab, merges) = (vocab.as_ref(), merges.as_ref());
        let vocab_text = std::fs::read_to_string(vocab).map_err(|e| Error::io(vocab, e))?;
        let merges_text = std::fs::read_to_string(merges).map_err(|e| Error::io(merges, e))?;
        Self::from_strs(&vocab_text, &merges_text)
    }

    /// Parses a JSON token→id map and a merges list (a `#version` header line
    /// followed by one space-separated pair per line).
    pub fn from_strs(vocab_json: &str, merges_txt: &str) -> Result<Self> {
        let encoder: HashMap<String, u32> = serde_json::from_str(vocab_json)
            .map_err(|e| Error::Tokenizer(format!("vocabulary is not a JSON map: {e}")))?;
        let mut pairs = Vec::new();
        for (lineno, line) in merges_txt.lines().enumerate() {
            if line.starts_with("#version") || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    pairs.push((a.to_string(), b.to_string()))
                }
                _ => {
                    return Err(Error::Tokenizer(format!(
                        "merges line {}: expected two symbols, got `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_parts(encoder, pairs)
    }

    /// Builds and validates a vocabulary from its parts.
    pub fn from_parts(encoder: HashMap<String, u32>, merges: Vec<(String, String)>) -> Result<Self> {
        let n = encoder.len();
        let mut decoder = vec![None; n];
        for (tok, &id) in &encoder {
            let slot = decoder.get_mut(id as usize).ok_or_else(|| {
                Error::Tokenizer(format!("id {id} of `{tok}` is outside [0, {n})"))
            })?;
            if slot.replace(tok.clone()).is_some() {
                return Err(Error::Tokenizer(format!("id {id} assigned twice")));
            }
        }
        let decoder: Vec<String> = decoder.into_iter().map(|t| t.expect("dense ids")).collect();

        let byte_encoder = bytes_to_unicode();
        for (b, c) in byte_encoder.iter().enumerate() {
            if !encoder.contains_key(&c.to_string()) {
                return Err(Error::Tokenizer(format!("vocabulary lacks the token for byte {b}")));
            }
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (a, b)) in merges.into_iter().enumerate() {
            let merged = format!("{a}{b}");
            if !encoder.contains_key(&merged) {
                return Err(Error::Tokenizer(format!(
                    "merge `{a} {b}` produces `{merged}`, which is not in the vocabulary"
                )));
            }
            ranks.entry((a, b)).or_insert(rank);
        }
        let byte_decoder = byte_encoder
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect();
        Ok(BpeVocab {
            encoder,
            decoder,
            ranks,
            byte_encoder,
            byte_decoder,
        })
    }

    /// The 256 single-byte tokens and no merges; token id = byte value.
    pub fn byte_level() -> Self {
        let encoder = bytes_to_unicode()
            .iter()
            .enumerate()
            .map(|(b, c)| (c.to_string(), b as u32))
            .collect();
        Self::from_parts(encoder, Vec::new()).expect("byte table is complete")
    }

    pub fn vocab_size(&self) -> usize {
        self.decoder.len()
    }

    pub fn merge_count(&self) -> usize {
        self.ranks.len()
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.encoder.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.decoder.get(id as usize).map(String::as_str)
    }

    /// Padding id: the end-of-text token when present, otherwise the last id.
    pub fn pad_id(&self) -> u32 {
        self.token_id(END_OF_TEXT)
            .unwrap_or(self.vocab_size() as u32 - 1)
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        for piece in pretokenize(text) {
            let symbols: Vec<String> = piece
                .bytes()
                .map(|b| self.byte_encoder[b as usize].to_string())
                .collect();
            for sym in self.merge(symbols) {
                ids.push(self.encoder[&sym]);
            }
        }
        ids
    }

    /// Inverse of [`encode`](Self::encode). Unknown ids are skipped; byte
    /// sequences that are not valid UTF-8 are replaced lossily.
    pub fn decode(&self, ids: &[u32]) -> String {
        let bytes: Vec<u8> = ids
            .iter()
            .filter_map(|&id| self.token(id))
            .flat_map(|tok| tok.chars())
            .filter_map(|c| self.byte_decoder.get(&c).copied())
            .collect();
        String::from_utf8_lossy(&bytes).into_owned()
    }

    /// Repeatedly merges the lowest-ranked adjacent pair until none applies.
    fn merge(&self, mut symbols: Vec<String>) -> Vec<String> {
        while symbols.len() > 1 {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len()
                    && self.ranks.get(&(symbols[i].clone(), symbols[i + 1].clone())) == Some(&rank)
                {
                    merged.push(format!("{}{}", symbols[i], symbols[i + 1]));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
        }
        symbols
    }
}

/// GPT-2's reversible byte→char table: printable bytes map to themselves,
/// the rest to code points from 256 upward.
fn bytes_to_unicode() -> [char; 256] {
    let printable = |b: u32| {
        (u32::from(b'!')..=u32::from(b'~')).contains(&b)
            || (0xA1..=0xAC).contains(&b)
            || (0xAE..=0xFF).contains(&b)
    };
    let mut table = ['\0'; 256];
    let mut next = 256u32;
    for b in 0..256u32 {
        table[b as usize] = if printable(b) {
            char::from_u32(b).expect("latin-1")
        } else {
            let c = char::from_u32(next).expect("valid code point");
            next += 1;
            c
        };
    }
    table
}
