use crate::error::{Error, Result};

/// The shipped rule file.
pub const BUILTIN_RULES: &str = include_str!("../../rules/chexpert.rules");

/// Number of conditions a rule set must define.
pub const CONDITION_COUNT: usize = 14;

/// Words of a phrase or cue, already lowercased and split.
pub type Words = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub name: String,
    pub phrases: Vec<Words>,
    /// Whether a positive or uncertain label here makes the document class 1.
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueList {
    pub cues: Vec<Words>,
    /// How many tokens past the end of a cue a mention may start.
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub conditions: Vec<Condition>,
    pub negation: CueList,
    pub uncertainty: CueList,
}

enum Section {
    None,
    Condition,
    Negation,
    Uncertainty,
}

fn rule_error(line: usize, message: impl Into<String>) -> Error {
    Error::RuleSet {
        line,
        message: message.into(),
    }
}

/// Splits text into lowercase alphanumeric words, dropping everything else.
pub(crate) fn words(text: &str) -> Words {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl RuleSet {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_RULES).expect("shipped rules are valid")
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut conditions: Vec<Condition> = Vec::new();
        let mut negation = (Vec::new(), None, 0);
        let mut uncertainty = (Vec::new(), None, 0);
        let mut section = Section::None;

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(header) = line.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| rule_error(lineno, "section header lacks `]`"))?
                    .trim();
                section = match header {
                    "negation" => {
                        negation.2 = lineno;
                        Section::Negation
                    }
                    "uncertainty" => {
                        uncertainty.2 = lineno;
                        Section::Uncertainty
                    }
                    _ => {
                        let name = header
                            .strip_prefix("condition")
                            .map(str::trim)
                            .and_then(|n| n.strip_prefix('"'))
                            .and_then(|n| n.strip_suffix('"'))
                            .filter(|n| !n.is_empty())
                            .ok_or_else(|| rule_error(lineno, format!("unknown section `[{header}]`")))?;
                        if conditions.iter().any(|c| c.name == name) {
                            return Err(rule_error(lineno, format!("condition `{name}` defined twice")));
                        }
                        conditions.push(Condition {
                            name: name.to_string(),
                            phrases: Vec::new(),
                            target: true,
                        });
                        Section::Condition
                    }
                };
                continue;
            }

            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| rule_error(lineno, format!("expected `key = value`, got `{line}`")))?;
            let phrase = || {
                let w = words(value);
                if w.is_empty() {
                    Err(rule_error(lineno, format!("`{key}` has no words")))
                } else {
                    Ok(w)
                }
            };
            match (&section, key) {
                (Section::Condition, "phrase") => {
                    let w = phrase()?;
                    conditions.last_mut().expect("in a condition").phrases.push(w);
                }
                (Section::Condition, "target") => {
                    conditions.last_mut().expect("in a condition").target = value
                        .parse()
                        .map_err(|_| rule_error(lineno, format!("target must be true or false, got `{value}`")))?;
                }
                (Section::Negation, "cue") => negation.0.push(phrase()?),
                (Section::Uncertainty, "cue") => uncertainty.0.push(phrase()?),
                (Section::Negation | Section::Uncertainty, "window") => {
                    let window: usize = value
                        .parse()
                        .ok()
                        .filter(|&w| w >= 1)
                        .ok_or_else(|| rule_error(lineno, format!("window must be a positive integer, got `{value}`")))?;
                    match section {
                        Section::Negation => negation.1 = Some(window),
                        _ => uncertainty.1 = Some(window),
                    }
                }
                (Section::None, _) => return Err(rule_error(lineno, "entry outside any section")),
                _ => return Err(rule_error(lineno, format!("unexpected key `{key}` here"))),
            }
        }

        let end = text.lines().count();
        if conditions.len() != CONDITION_COUNT {
            return Err(rule_error(
                end,
                format!("expected {CONDITION_COUNT} conditions, found {}", conditions.len()),
            ));
        }
        if let Some(c) = conditions.iter().find(|c| c.phrases.is_empty()) {
            return Err(rule_error(end, format!("condition `{}` has no phrases", c.name)));
        }
        let finish = |(cues, window, line): (Vec<Words>, Option<usize>, usize), name: &str| {
            if line == 0 {
                return Err(rule_error(end, format!("missing `[{name}]` section")));
            }
            let window = window.ok_or_else(|| rule_error(line, format!("`[{name}]` has no window")))?;
            if cues.is_empty() {
                return Err(rule_error(line, format!("`[{name}]` has no cues")));
            }
            Ok(CueList { cues, window })
        };
        Ok(RuleSet {
            conditions,
            negation: finish(negation, "negation")?,
            uncertainty: finish(uncertainty, "uncertainty")?,
        })
    }
}
