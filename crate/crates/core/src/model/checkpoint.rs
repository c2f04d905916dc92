//! Binary checkpoint container.
//!
//! Layout: the 8 magic bytes `GPT2CKPT`, a little-endian `u32` version, a
//! little-endian `u64` metadata length, the UTF-8 JSON metadata (model
//! config plus a tensor index), then every tensor's data as little-endian
//! `f32` in index order. Index offsets are relative to the start of the
//! data section.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{init_head, param_specs, ParamGroup};
use super::{ModelConfig, ParameterStore};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"GPT2CKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: ModelConfig,
    pub tensors: Vec<TensorEntry>,
}

/// Writes every parameter of `params` in canonical order. Identical
/// inputs produce identical bytes.
pub fn save_checkpoint(params: &ParameterStore, config: &ModelConfig, path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::Checkpoint("empty output path".into()));
    }
    let mut offset = 0u64;
    let tensors = params
        .iter()
        .map(|p| {
            let entry = TensorEntry {
                name: p.name.clone(),
                shape: p.tensor.shape().to_vec(),
                offset,
                dtype: "f32".into(),
            };
            offset += 4 * p.tensor.numel() as u64;
            entry
        })
        .collect();
    let meta = serde_json::to_vec(&Metadata {
        config: config.clone(),
        tensors,
    })?;

    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(meta.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&meta).map_err(io)?;
    for p in params.iter() {
        for v in p.tensor.data() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Reads the metadata header of a checkpoint without loading tensor data.
pub fn read_metadata(path: &Path) -> Result<Metadata> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_header(&mut r, path).map(|(meta, _)| meta)
}

fn read_header(r: &mut impl Read, path: &Path) -> Result<(Metadata, u64)> {
    let io = |e| Error::io(path, e);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::BadMagic)?;
    if &magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(io)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(io)?;
    let len = u64::from_le_bytes(len);
    let mut meta = Vec::new();
    r.take(len).read_to_end(&mut meta).map_err(io)?;
    if meta.len() as u64 != len {
        return Err(Error::Checkpoint("truncated metadata".into()));
    }
    let meta: Metadata = serde_json::from_slice(&meta)?;
    Ok((meta, 20 + len))
}

/// Loads a full checkpoint, checking every tensor against `expected`.
/// All loaded tensors are trainable.
pub fn load_checkpoint(path: &Path, expected: &ModelConfig) -> Result<ParameterStore> {
    load(path, expected, None)
}

/// Loads a checkpoint that may lack the classification head (a converted
/// pretrained backbone). A missing head is initialized from `head_seed`.
pub fn load_backbone(path: &Path, expected: &ModelConfig, head_seed: u64) -> Result<ParameterStore> {
    load(path, expected, Some(head_seed))
}

fn load(path: &Path, expected: &ModelConfig, head_seed: Option<u64>) -> Result<ParameterStore> {
    expected.validate()?;
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let (meta, _) = read_header(&mut r, path)?;

    // Validate the whole index against the expected architecture before
    // reading any data, in canonical order so errors name the first
    // offending tensor.
    let specs = param_specs(expected);
    let mut wanted = Vec::with_capacity(specs.len());
    for spec in &specs {
        match meta.tensors.iter().find(|t| t.name == spec.name) {
            Some(entry) => {
                if entry.shape != spec.shape {
                    return Err(Error::TensorShape {
                        name: spec.name.clone(),
                        expected: spec.shape.clone(),
                        found: entry.shape.clone(),
                    });
                }
                if entry.dtype != "f32" {
                    return Err(Error::Checkpoint(format!(
                        "tensor `{}` has unsupported dtype `{}`",
                        entry.name, entry.dtype
                    )));
                }
                wanted.push(Some(entry));
            }
            None if spec.group == ParamGroup::Head && head_seed.is_some() => wanted.push(None),
            None => return Err(Error::MissingTensor(spec.name.clone())),
        }
    }
    for t in &meta.tensors {
        if !specs.iter().any(|s| s.name == t.name) {
            log::warn!("{}: ignoring unexpected tensor `{}`", path.display(), t.name);
        }
    }

    // Tensors are read in file order so the data section streams once.
    let mut stored: Vec<&TensorEntry> = meta.tensors.iter().collect();
    stored.sort_by_key(|t| t.offset);
    let mut data: Vec<Option<Vec<f32>>> = vec![None; specs.len()];
    let mut pos = 0u64;
    for entry in stored {
        if entry.offset < pos {
            return Err(Error::Checkpoint(format!("tensor `{}` overlaps its predecessor", entry.name)));
        }
        let skip = entry.offset - pos;
        std::io::copy(&mut (&mut r).take(skip), &mut std::io::sink()).map_err(|e| Error::io(path, e))?;
        let n: usize = entry.shape.iter().product();
        let mut bytes = vec![0u8; 4 * n];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Checkpoint(format!("data for tensor `{}` is truncated", entry.name)))?;
        pos = entry.offset + bytes.len() as u64;
        if let Some(slot) = specs.iter().position(|s| s.name == entry.name) {
            data[slot] = Some(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            );
        }
    }

    let mut head = head_seed
        .filter(|_| wanted.iter().any(Option::is_none))
        .map(|seed| init_head::<f32>(expected, seed))
        .transpose()?
        .map(|(w, b)| [Some(w), Some(b)]);
    let tensors = specs
        .iter()
        .zip(data)
        .map(|(spec, values)| match values {
            Some(v) => Tensor::new(spec.shape.clone(), v),
            None => {
                let fresh = head.as_mut().and_then(|h| {
                    let i = usize::from(spec.name == "head.bias");
                    h[i].take()
                });
                fresh.ok_or_else(|| Error::MissingTensor(spec.name.clone()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ParameterStore::from_tensors(expected, tensors)
}
