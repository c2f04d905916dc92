use super::BpeVocab;
use crate::error::{Error, Result};

/// Default truncation length, matching the training setup.
pub const DEFAULT_MAX_LEN: usize = 512;

/// A right-padded mini-batch: token matrix, attention mask and labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBatch {
    pub batch: usize,
    pub seq: usize,
    /// Row-major `batch × seq` token ids.
    pub token_ids: Vec<u32>,
    /// Row-major `batch × seq`; 1 for real tokens, 0 for padding.
    pub attention_mask: Vec<u8>,
    pub labels: Vec<usize>,
    /// Position of the last real token in each row.
    pub last_index: Vec<usize>,
    /// Rows whose text produced no tokens; they hold a single pad token.
    pub empty_rows: Vec<usize>,
}

impl EncodedBatch {
    /// Truncates each sequence to its first `max_len` ids and right-pads to
    /// exactly `max_len` with `pad_id`.
    pub fn from_token_ids<S: AsRef<[u32]>>(
        sequences: &[S],
        labels: &[usize],
        max_len: usize,
        pad_id: u32,
    ) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        if max_len == 0 {
            return Err(Error::InvalidConfig("max_len must be at least 1".into()));
        }
        if labels.len() != sequences.len() {
            return Err(Error::ShapeMismatch {
                op: "encode_batch",
                lhs: vec![sequences.len()],
                rhs: vec![labels.len()],
            });
        }
        let (batch, seq) = (sequences.len(), max_len);
        let mut token_ids = vec![pad_id; batch * seq];
        let mut attention_mask = vec![0u8; batch * seq];
        let mut last_index = Vec::with_capacity(batch);
        let mut empty_rows = Vec::new();
        for (row, ids) in sequences.iter().enumerate() {
            let ids = ids.as_ref();
            let len = ids.len().min(seq);
            token_ids[row * seq..row * seq + len].copy_from_slice(&ids[..len]);
            if len == 0 {
                log::warn!("batch row {row} encodes to zero tokens; using a single pad token");
                empty_rows.push(row);
                attention_mask[row * seq] = 1;
                last_index.push(0);
            } else {
                attention_mask[row * seq..row * seq + len].fill(1);
                last_index.push(len - 1);
            }
        }
        Ok(EncodedBatch {
            batch,
            seq,
            token_ids,
            attention_mask,
            labels: labels.to_vec(),
            last_index,
            empty_rows,
        })
    }

    pub fn row_ids(&self, row: usize) -> &[u32] {
        &self.token_ids[row * self.seq..(row + 1) * self.seq]
    }

    pub fn row_mask(&self, row: usize) -> &[u8] {
        &self.attention_mask[row * self.seq..(row + 1) * self.seq]
    }
}

/// Tokenizes `texts` and packs them into a fixed-length batch.
pub fn encode_batch<S: AsRef<str>>(
    texts: &[S],
    labels: &[usize],
    max_len: usize,
    vocab: &BpeVocab,
) -> Result<EncodedBatch> {
    let encoded: Vec<Vec<u32>> = texts.iter().map(|t| vocab.encode(t.as_ref())).collect();
    EncodedBatch::from_token_ids(&encoded, labels, max_len, vocab.pad_id())
}
