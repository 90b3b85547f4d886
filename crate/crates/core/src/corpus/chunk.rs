//! Greedy sentence-chunking into ~120-word paragraphs.

use super::segment::split_sentences;
use super::{Document, Paragraph};

/// A chunk keeps absorbing sentences until it reaches this many words.
pub const CHUNK_MIN_WORDS: usize = 100;
/// A chunk that already holds `CHUNK_MIN_WORDS` closes rather than grow past this.
pub const CHUNK_MAX_WORDS: usize = 140;
/// Trailing chunks shorter than this are discarded.
pub const CHUNK_KEEP_MIN_WORDS: usize = 50;

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Splits every chapter of `doc` into paragraphs of consecutive whole
/// sentences.
///
/// Sentences accumulate until the chunk holds at least [`CHUNK_MIN_WORDS`]
/// words; the chunk closes when adding the next sentence would push it past
/// [`CHUNK_MAX_WORDS`]. Sentences are never split, so a single long sentence
/// can exceed the window on its own. A trailing chunk under
/// [`CHUNK_KEEP_MIN_WORDS`] words is dropped. Paragraphs never span chapter
/// boundaries and the whole procedure is deterministic.
pub fn chunk_paragraphs(doc: &Document) -> Vec<Paragraph> {
    let mut paragraphs = Vec::new();
    for chapter in &doc.chapters {
        chunk_chapter(doc, chapter.index, &chapter.text, &mut paragraphs);
    }
    paragraphs
}

fn chunk_chapter(doc: &Document, chapter_index: u32, text: &str, out: &mut Vec<Paragraph>) {
    let sentences = split_sentences(text);
    if sentences.is_empty() {
        return;
    }

    let counts: Vec<usize> = sentences
        .iter()
        .map(|s| word_count(&text[s.start..s.end]))
        .collect();

    // Sentence-index ranges (inclusive) of the chunks to emit.
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut first = 0usize;
    let mut words = 0usize;
    for (i, &wc) in counts.iter().enumerate() {
        if words >= CHUNK_MIN_WORDS && words + wc > CHUNK_MAX_WORDS {
            ranges.push((first, i - 1));
            first = i;
            words = 0;
        }
        words += wc;
    }
    if words >= CHUNK_KEEP_MIN_WORDS {
        ranges.push((first, counts.len() - 1));
    }

    // Byte offsets of chunk starts converted to char offsets in one pass.
    let mut char_pos = 0usize;
    let mut byte_pos = 0usize;
    for (first, last) in ranges {
        let start = sentences[first].start;
        let end = sentences[last].end;
        char_pos += text[byte_pos..start].chars().count();
        byte_pos = start;
        let slice = &text[start..end];
        out.push(Paragraph {
            paragraph_id: format!("{}:{}:{}", doc.doc_id, chapter_index, char_pos),
            doc_id: doc.doc_id.clone(),
            chapter_index,
            char_offset: char_pos,
            text: slice.to_string(),
            word_count: word_count(slice),
        });
    }
}
