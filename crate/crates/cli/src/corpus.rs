//! Corpus ingestion: delimiter-separated text with a `doc_id,text[,label]`
//! header (`.csv`, `.tsv`) or one JSON object per line (`.jsonl`, `.ndjson`).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use gptft::trainer::Example;
use serde::{Deserialize, Serialize};

use crate::error::{Category, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Delimited(u8),
    JsonLines,
}

fn format_of(path: &Path) -> CliResult<Format> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Ok(Format::Delimited(b',')),
        Some("tsv") => Ok(Format::Delimited(b'\t')),
        Some("jsonl" | "ndjson") => Ok(Format::JsonLines),
        _ => Err(CliError::new(
            Category::Input,
            format!("{}: unrecognized corpus format (use .csv, .tsv, .jsonl or .ndjson)", path.display()),
        )),
    }
}

fn input_error(path: &Path, line: u64, message: impl std::fmt::Display) -> CliError {
    CliError::new(Category::Input, format!("{}:{line}: {message}", path.display()))
}

/// Calls `f` on every record in file order, rejecting duplicate ids.
pub fn for_each_record(path: &Path, mut f: impl FnMut(Record) -> CliResult) -> CliResult<usize> {
    let format = format_of(path)?;
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut seen = HashSet::new();
    let mut count = 0usize;
    let mut accept = |record: Record, line: u64| -> CliResult {
        if !seen.insert(record.doc_id.clone()) {
            return Err(input_error(path, line, format!("duplicate doc_id `{}`", record.doc_id)));
        }
        count += 1;
        f(record)
    };
    match format {
        Format::JsonLines => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| CliError::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: Record =
                    serde_json::from_str(&line).map_err(|e| input_error(path, i as u64 + 1, e))?;
                accept(record, i as u64 + 1)?;
            }
        }
        Format::Delimited(delimiter) => {
            let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(file);
            let headers = reader.headers().map_err(|e| input_error(path, 1, e))?.clone();
            for required in ["doc_id", "text"] {
                if !headers.iter().any(|h| h == required) {
                    return Err(input_error(path, 1, format!("header lacks a `{required}` column")));
                }
            }
            for row in reader.deserialize::<Record>() {
                let record = row.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line());
                    input_error(path, line, e)
                })?;
                if record.text.contains(['\n', '\r']) {
                    return Err(input_error(
                        path,
                        0,
                        format!("text of `{}` spans lines; use the JSON lines format for multi-line text", record.doc_id),
                    ));
                }
                accept(record, 0)?;
            }
        }
    }
    Ok(count)
}

pub fn read_records(path: &Path) -> CliResult<Vec<Record>> {
    let mut out = Vec::new();
    for_each_record(path, |r| {
        out.push(r);
        Ok(())
    })?;
    if out.is_empty() {
        return Err(CliError::new(Category::Input, format!("{}: corpus is empty", path.display())));
    }
    Ok(out)
}

/// Reads a corpus in which every record carries a label.
pub fn read_examples(path: &Path) -> CliResult<Vec<Example>> {
    let records = read_records(path)?;
    let unlabeled: Vec<&str> = records.iter().filter(|r| r.label.is_none()).map(|r| r.doc_id.as_str()).collect();
    if let Some(first) = unlabeled.first() {
        return Err(CliError::new(
            Category::Input,
            format!(
                "{}: {} of {} documents lack a label (first: `{first}`); run `gptft label` first",
                path.display(),
                unlabeled.len(),
                records.len()
            ),
        ));
    }
    Ok(records
        .into_iter()
        .map(|r| Example {
            doc_id: r.doc_id,
            text: r.text,
            label: r.label.expect("checked above"),
        })
        .collect())
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> CliResult {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| CliError::new(Category::Io, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Errors when `output` names the same file as `input`.
pub fn ensure_distinct(input: &Path, output: &Path) -> CliResult {
    let same = match (input.canonicalize(), output.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(CliError::new(
            Category::Usage,
            format!("refusing to overwrite the input file {}", input.display()),
        ));
    }
    Ok(())
}

pub fn create_dir(path: &Path) -> CliResult {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
