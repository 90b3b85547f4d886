//! Rule-based sentence segmentation.
//!
//! A sentence ends at a run of `.`, `!`, or `?` (plus any closing quotes or
//! brackets) that is followed by whitespace and then an uppercase letter,
//! an opening quote, or a digit. Periods belonging to a known abbreviation
//! do not end a sentence, and neither do periods inside numbers.

/// Byte range of one sentence within the source text, whitespace-trimmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

/// Abbreviations whose trailing period never ends a sentence. Compared
/// case-insensitively against the word preceding the period.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "cf", "fig",
    "eq", "no", "al", "approx", "inc", "ltd", "co", "dept", "est", "vol", "ch", "sec", "u.s",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || is_opener(c)
}

/// The word immediately preceding byte position `end` (exclusive),
/// lowercased and stripped of a trailing period.
fn preceding_word(text: &str, end: usize) -> String {
    let head = &text[..end];
    let start = head
        .char_indices()
        .rev()
        .take_while(|(_, c)| !c.is_whitespace())
        .last()
        .map(|(i, _)| i)
        .unwrap_or(end);
    head[start..].trim_end_matches('.').to_lowercase()
}

/// Splits text into sentence spans. Empty input yields no spans.
pub fn split_sentences(text: &str) -> Vec<SentenceSpan> {
    let mut spans = Vec::new();
    let bytes_len = text.len();
    let mut sentence_start: Option<usize> = None;
    let mut iter = text.char_indices().peekable();

    while let Some((idx, c)) = iter.next() {
        if sentence_start.is_none() {
            if c.is_whitespace() {
                continue;
            }
            sentence_start = Some(idx);
        }
        if !is_terminator(c) {
            continue;
        }
        // Absorb the full terminator run plus closing punctuation.
        let mut end = idx + c.len_utf8();
        while let Some(&(next_idx, next_c)) = iter.peek() {
            if is_terminator(next_c) || is_closer(next_c) {
                end = next_idx + next_c.len_utf8();
                iter.next();
            } else {
                break;
            }
        }
        let at_text_end = end >= bytes_len;
        let mut boundary = at_text_end;
        if !boundary {
            let rest = &text[end..];
            let mut rest_chars = rest.chars();
            if let Some(first) = rest_chars.next() {
                if first.is_whitespace() {
                    let next_word_start = rest.chars().find(|ch| !ch.is_whitespace());
                    boundary = next_word_start.is_some_and(starts_sentence);
                }
            }
        }
        if boundary && c == '.' {
            let word = preceding_word(text, idx);
            if ABBREVIATIONS.contains(&word.as_str()) {
                boundary = false;
            }
        }
        if boundary {
            let start = sentence_start.take().expect("sentence in progress");
            spans.push(SentenceSpan { start, end });
        }
    }

    if let Some(start) = sentence_start {
        let end = text[start..]
            .char_indices()
            .rev()
            .find(|(_, c)| !c.is_whitespace())
            .map(|(i, c)| start + i + c.len_utf8())
            .unwrap_or(start);
        if end > start {
            spans.push(SentenceSpan { start, end });
        }
    }
    spans
}
