use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gptft::labeler::{corpus_stats, CorpusStats, LabeledDocument, RuleSet};

use crate::config::RunConfig;
use crate::corpus::{create_dir, ensure_distinct, for_each_record};
use crate::error::{Category, CliError, CliResult};

#[derive(Debug)]
pub struct LabelOutcome {
    pub output: PathBuf,
    pub stats: CorpusStats,
}

/// Labels every document of `input`, streaming to a JSON lines file. Any
/// label column in the input is replaced.
pub fn cmd_label(input: &Path, config: &RunConfig, output: Option<&Path>) -> CliResult<LabelOutcome> {
    let rules = match &config.rules {
        Some(path) => RuleSet::from_file(path)?,
        None => RuleSet::builtin(),
    };
    let output = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = config.output_dir.join("labels");
            create_dir(&dir)?;
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
            dir.join(format!("{stem}.jsonl"))
        }
    };
    ensure_distinct(input, &output)?;

    // Write to a sibling temporary file so a failed run leaves no partial output.
    let partial = output.with_extension("jsonl.partial");
    let file = File::create(&partial).map_err(|e| CliError::io(&partial, e))?;
    let mut w = BufWriter::new(file);
    let mut targets = Vec::new();
    let result = for_each_record(input, |record| {
        let doc = LabeledDocument::label(record.doc_id, record.text, &rules);
        targets.push(doc.binary_target);
        serde_json::to_writer(&mut w, &doc).map_err(|e| CliError::new(Category::Io, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(&partial, e))
    })
    .and_then(|_| w.flush().map_err(|e| CliError::io(&partial, e)));
    drop(w);
    let stats = result.and_then(|()| {
        corpus_stats(targets).map_err(|_| {
            CliError::new(Category::Input, format!("{}: corpus is empty", input.display()))
        })
    });
    match stats {
        Ok(stats) => {
            std::fs::rename(&partial, &output).map_err(|e| CliError::io(&output, e))?;
            Ok(LabelOutcome { output, stats })
        }
        Err(e) => {
            let _ = std::fs::remove_file(&partial);
            Err(e)
        }
    }
}
