use crate::config::RunConfig;
use crate::error::{Category, CliError, CliResult};

/// Encodes each item to space-separated ids, one line per item; with
/// `decode`, treats the items as ids and prints the decoded text.
pub fn cmd_tokenize(config: &RunConfig, decode: bool, items: &[String]) -> CliResult<String> {
    let vocab = config.tokenizer()?;
    if decode {
        let ids = items
            .iter()
            .flat_map(|s| s.split_whitespace())
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| CliError::new(Category::Input, format!("`{t}` is not a token id")))
            })
            .collect::<CliResult<Vec<u32>>>()?;
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= vocab.vocab_size()) {
            return Err(gptft::Error::TokenOutOfRange {
                id: bad,
                vocab: vocab.vocab_size(),
            }
            .into());
        }
        return Ok(vocab.decode(&ids));
    }
    let lines: Vec<String> = items
        .iter()
        .map(|text| {
            let ids: Vec<String> = vocab.encode(text).iter().map(u32::to_string).collect();
            ids.join(" ")
        })
        .collect();
    Ok(lines.join("\n"))
}
