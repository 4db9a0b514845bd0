//! Shared text handling: Unicode normalization flags and the word-boundary
//! rule used by the corpus scanner, the evaluator's whole-word matcher, and
//! BLEU tokenization.

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Normalization applied to text before counting or matching.
///
/// `nfc` canonically composes the input; `case_fold` lowercases it. The same
/// flags must be used when building a frequency table and when querying it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub nfc: bool,
    pub case_fold: bool,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization { nfc: true, case_fold: false }
    }
}

impl Normalization {
    pub fn apply(&self, s: &str) -> String {
        let composed = if self.nfc { nfc(s) } else { s.to_string() };
        if self.case_fold {
            composed.to_lowercase()
        } else {
            composed
        }
    }
}

/// Canonical composition (NFC). Returns the input unchanged when it is
/// already composed, which is the common case for European text.
pub fn nfc(s: &str) -> String {
    if is_nfc(s) {
        s.to_string()
    } else {
        s.nfc().collect()
    }
}

const APOSTROPHES: [char; 2] = ['\'', '\u{2019}'];

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || is_combining_mark(c)
}

/// Splits a line into words: maximal runs of Unicode letters and combining
/// marks, with apostrophes kept only word-internally ("don't" is one word,
/// "'quoted'" drops the quotes). Everything else is a separator.
pub fn split_words(line: &str) -> Vec<&str> {
    let mut words = Vec::new();
    let mut start: Option<usize> = None;
    let mut prev_wordy = false;
    let mut iter = line.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        let wordy = if is_word_char(c) {
            true
        } else if APOSTROPHES.contains(&c) {
            // internal only: a word char on both sides
            prev_wordy && matches!(iter.peek(), Some(&(_, n)) if is_word_char(n))
        } else {
            false
        };
        if wordy {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            words.push(&line[s..i]);
        }
        prev_wordy = wordy;
    }
    if let Some(s) = start {
        words.push(&line[s..]);
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_whitespace() {
        assert_eq!(split_words("der Arzt, die Ärztin!"), vec!["der", "Arzt", "die", "Ärztin"]);
    }

    #[test]
    fn internal_apostrophe_kept() {
        assert_eq!(split_words("don't stop"), vec!["don't", "stop"]);
        assert_eq!(split_words("'quoted' l'été"), vec!["quoted", "l'été"]);
        assert_eq!(split_words("rock'"), vec!["rock"]);
    }

    #[test]
    fn combining_marks_stay_in_word() {
        // Hebrew with niqqud: the vowel points are Mn marks.
        let s = "שָׁלוֹם עולם";
        let words = split_words(s);
        assert_eq!(words.len(), 2);
        assert_eq!(words[0], "שָׁלוֹם");
    }

    #[test]
    fn digits_are_separators() {
        assert_eq!(split_words("abc123def"), vec!["abc", "def"]);
    }

    #[test]
    fn normalization_composes_and_folds() {
        let decomposed = "A\u{0308}rztin"; // Ärztin with combining diaeresis
        let norm = Normalization { nfc: true, case_fold: false };
        assert_eq!(norm.apply(decomposed), "Ärztin");
        let fold = Normalization { nfc: true, case_fold: true };
        assert_eq!(fold.apply("ÄRZTIN"), "ärztin");
    }
}
