//! Rule-based weak labeling of radiology reports: phrase matching per
//! condition, with negation and uncertainty cues that scope forward over a
//! fixed token window.

mod rules;

pub use rules::{Condition, CueList, RuleSet, Words, BUILTIN_RULES, CONDITION_COUNT};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::trainer::Example;

/// Label of one condition in one report. The derived order is the
/// aggregation precedence: a condition takes the maximum over its mentions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionLabel {
    Missing,
    Negative,
    Uncertain,
    Positive,
}

impl MentionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MentionLabel::Missing => "missing",
            MentionLabel::Negative => "negative",
            MentionLabel::Uncertain => "uncertain",
            MentionLabel::Positive => "positive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionLabel {
    pub condition: String,
    pub label: MentionLabel,
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    /// `.`, `!` or `?` outside a decimal number.
    Boundary,
}

fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            word.extend(c.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            tokens.push(Token::Word(std::mem::take(&mut word)));
        }
        let decimal_point = c == '.'
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        if matches!(c, '.' | '!' | '?') && !decimal_point {
            tokens.push(Token::Boundary);
        }
    }
    if !word.is_empty() {
        tokens.push(Token::Word(word));
    }
    tokens
}

fn matches_at(tokens: &[Token], at: usize, phrase: &[String]) -> bool {
    tokens.len() >= at + phrase.len()
        && phrase
            .iter()
            .zip(&tokens[at..])
            .all(|(p, t)| matches!(t, Token::Word(w) if w == p))
}

fn ends_scope(token: &Token) -> bool {
    match token {
        Token::Boundary => true,
        Token::Word(w) => w == "but",
    }
}

/// Index of the last token of every cue occurrence.
fn cue_ends(tokens: &[Token], cues: &CueList) -> Vec<usize> {
    let mut ends: Vec<usize> = (0..tokens.len())
        .flat_map(|i| {
            cues.cues
                .iter()
                .filter(move |cue| matches_at(tokens, i, cue))
                .map(move |cue| i + cue.len() - 1)
        })
        .collect();
    ends.sort_unstable();
    ends.dedup();
    ends
}

/// Whether a cue ends before `start`, within `window` tokens of it, with no
/// scope terminator in between.
fn in_scope(tokens: &[Token], ends: &[usize], window: usize, start: usize) -> bool {
    ends.iter().any(|&end| {
        end < start && start - end <= window && !tokens[end + 1..start].iter().any(ends_scope)
    })
}

/// Labels every condition of `rules` in `text`, in rule-file order.
pub fn label_report(text: &str, rules: &RuleSet) -> Vec<ConditionLabel> {
    let tokens = tokenize(text);
    let negations = cue_ends(&tokens, &rules.negation);
    let uncertainties = cue_ends(&tokens, &rules.uncertainty);
    rules
        .conditions
        .iter()
        .map(|condition| {
            let mut label = MentionLabel::Missing;
            for start in 0..tokens.len() {
                if !condition.phrases.iter().any(|p| matches_at(&tokens, start, p)) {
                    continue;
                }
                let mention = if in_scope(&tokens, &negations, rules.negation.window, start) {
                    MentionLabel::Negative
                } else if in_scope(&tokens, &uncertainties, rules.uncertainty.window, start) {
                    MentionLabel::Uncertain
                } else {
                    MentionLabel::Positive
                };
                label = label.max(mention);
            }
            ConditionLabel {
                condition: condition.name.clone(),
                label,
                target: condition.target,
            }
        })
        .collect()
}

/// 1 when any target condition is positive or uncertain.
pub fn binarize(labels: &[ConditionLabel]) -> usize {
    usize::from(
        labels
            .iter()
            .any(|c| c.target && c.label >= MentionLabel::Uncertain),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDocument {
    pub doc_id: String,
    pub text: String,
    pub conditions: Vec<ConditionLabel>,
    pub binary_target: usize,
}

impl LabeledDocument {
    pub fn label(doc_id: impl Into<String>, text: impl Into<String>, rules: &RuleSet) -> Self {
        let text = text.into();
        let conditions = label_report(&text, rules);
        LabeledDocument {
            doc_id: doc_id.into(),
            binary_target: binarize(&conditions),
            conditions,
            text,
        }
    }

    pub fn to_example(&self) -> Example {
        Example {
            doc_id: self.doc_id.clone(),
            text: self.text.clone(),
            label: self.binary_target,
        }
    }
}

struct ConditionMap<'a>(&'a [ConditionLabel]);

impl Serialize for ConditionMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for c in self.0 {
            map.serialize_entry(&c.condition, &c.label)?;
        }
        map.end()
    }
}

/// Serialized as `{doc_id, text, label, conditions: {name: label, ...}}` with
/// conditions in rule-file order.
impl Serialize for LabeledDocument {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("doc_id", &self.doc_id)?;
        map.serialize_entry("text", &self.text)?;
        map.serialize_entry("label", &self.binary_target)?;
        map.serialize_entry("conditions", &ConditionMap(&self.conditions))?;
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub total: usize,
    pub positive_or_uncertain: usize,
    pub negative: usize,
    pub positive_fraction: f64,
    pub negative_fraction: f64,
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "class\tcount\tpercent")?;
        writeln!(
            f,
            "positive or uncertain (1)\t{}\t{:.1}%",
            self.positive_or_uncertain,
            100.0 * self.positive_fraction
        )?;
        writeln!(f, "negative (0)\t{}\t{:.1}%", self.negative, 100.0 * self.negative_fraction)?;
        write!(f, "total\t{}\t100.0%", self.total)
    }
}

pub fn corpus_stats(targets: impl IntoIterator<Item = usize>) -> Result<CorpusStats> {
    let (mut total, mut positive) = (0usize, 0usize);
    for t in targets {
        total += 1;
        positive += usize::from(t == 1);
    }
    if total == 0 {
        return Err(Error::EmptyInput("corpus"));
    }
    Ok(CorpusStats {
        total,
        positive_or_uncertain: positive,
        negative: total - positive,
        positive_fraction: positive as f64 / total as f64,
        negative_fraction: (total - positive) as f64 / total as f64,
    })
}

#[cfg(test)]
mod tests;
