//! Trigram frequency diagnostics over an access split.
//!
//! Used to eyeball stylistic differences between the public and non-public
//! portions of a corpus (preview text tends toward chapter-opening phrases).

use std::collections::HashMap;

use super::{label_access, AccessLabel, Paragraph};

fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let cleaned: String = raw
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .flat_map(|c| c.to_lowercase())
                .collect();
            let cleaned = cleaned.trim_matches('\'').to_string();
            (!cleaned.is_empty()).then_some(cleaned)
        })
        .collect()
}

/// Counts case-folded, punctuation-stripped three-word phrases over the
/// paragraphs belonging to `split`, using a sliding window within each
/// paragraph. Results are sorted by count descending, ties broken by phrase.
pub fn trigram_stats(paragraphs: &[Paragraph], split: AccessLabel) -> Vec<(String, u64)> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for paragraph in paragraphs {
        if label_access(paragraph) != split {
            continue;
        }
        let words = tokens(&paragraph.text);
        for window in words.windows(3) {
            *counts.entry(window.join(" ")).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}
