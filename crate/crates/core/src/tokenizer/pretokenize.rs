//! Hand-written equivalent of the GPT-2 pre-tokenization pattern
//!
//! ```text
//! 's|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+
//! ```
//!
//! Alternatives are tried in order at each position, exactly as the regex
//! engine would, including the one-character backtrack of `\s+(?!\S)`.

const CONTRACTIONS: [&str; 7] = ["'s", "'t", "'re", "'ve", "'m", "'ll", "'d"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Letter,
    Number,
    Space,
    Other,
}

fn class(c: char) -> Class {
    if c.is_alphabetic() {
        Class::Letter
    } else if c.is_numeric() {
        Class::Number
    } else if c.is_whitespace() {
        Class::Space
    } else {
        Class::Other
    }
}

/// Splits `text` into the pieces BPE is applied to independently.
pub fn pretokenize(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let class_at = |i: usize| chars.get(i).map(|&(_, c)| class(c));
    let run_end = |from: usize, want: Class| {
        let mut j = from;
        while class_at(j) == Some(want) {
            j += 1;
        }
        j
    };

    let mut pieces = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let rest = &text[byte_at(i)..];
        if let Some(c) = CONTRACTIONS.iter().find(|c| rest.starts_with(**c)) {
            let end = i + c.chars().count();
            pieces.push(&text[byte_at(i)..byte_at(end)]);
            i = end;
            continue;
        }

        // ` ?X+` for letters, numbers and "other".
        let body = if chars[i].1 == ' ' { i + 1 } else { i };
        let end = match class_at(body) {
            Some(k @ (Class::Letter | Class::Number | Class::Other)) => run_end(body, k),
            _ => body,
        };
        if end > body {
            pieces.push(&text[byte_at(i)..byte_at(end)]);
            i = end;
            continue;
        }

        // Whitespace: `\s+(?!\S)` then `\s+`.
        let ws_end = run_end(i, Class::Space);
        let end = if ws_end == chars.len() || ws_end - i == 1 {
            ws_end
        } else {
            ws_end - 1
        };
        pieces.push(&text[byte_at(i)..byte_at(end)]);
        i = end;
    }
    pieces
}
