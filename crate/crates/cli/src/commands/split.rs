use std::path::{Path, PathBuf};

use gptft::trainer::split_dataset;

use crate::config::RunConfig;
use crate::corpus::{create_dir, read_examples, write_jsonl};
use crate::error::CliResult;

/// File names written under `splits/`, in train, val, test order.
pub const SPLIT_FILES: [&str; 3] = ["train.jsonl", "val.jsonl", "test.jsonl"];

/// Writes the three splits of a labeled corpus; returns (name, size, path).
pub fn cmd_split(input: &Path, config: &RunConfig) -> CliResult<Vec<(&'static str, usize, PathBuf)>> {
    let docs = read_examples(input)?;
    let split = split_dataset(&docs, config.seed)?;
    let dir = config.output_dir.join("splits");
    create_dir(&dir)?;
    let mut out = Vec::new();
    for ((name, part), file) in [("train", &split.train), ("val", &split.val), ("test", &split.test)]
        .into_iter()
        .zip(SPLIT_FILES)
    {
        let path = dir.join(file);
        write_jsonl(&path, part)?;
        out.push((name, part.len(), path));
    }
    Ok(out)
}
