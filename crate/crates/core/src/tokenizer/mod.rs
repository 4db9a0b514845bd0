//! Unigram language-model subword tokenization.
//!
//! A [`UnigramVocab`] maps tokens to log-probability scores; segmentation
//! picks the token cover of a word maximizing the score sum (Viterbi, in
//! [`segment`]). The module also provides token-count histograms over a
//! profession lexicon, the vocabulary-protection intervention that forces
//! whole gendered forms to stay unsplit, and a desk-scale trainer
//! ([`train::train_unigram`]).

mod segment;
pub mod train;

pub use segment::{count_tokens, segment, Segmentation};
pub use train::{train_unigram, TrainParams};

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::{ProfessionLexicon, Stereotype};
use crate::text::nfc;

pub const DEFAULT_UNK_TOKEN: &str = "<unk>";

/// Score handicap applied below the minimum vocabulary score when an unk
/// entry has to be synthesized.
const UNK_PENALTY: f64 = 10.0;

/// The word-boundary marker used by published vocabulary dumps.
pub const WORD_MARKER: char = '\u{2581}';

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("duplicate token {token:?} (lines {first} and {second})")]
    DuplicateToken { token: String, first: usize, second: usize },
    #[error("line {line}: cannot parse score {score:?}")]
    BadScore { line: usize, score: String },
    #[error("line {line}: expected `token<TAB>score`")]
    BadLine { line: usize },
    #[error("line {line}: empty token")]
    EmptyToken { line: usize },
    #[error("line {line}: non-finite score for token {token:?}")]
    NonFiniteScore { line: usize, token: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Controls whether segmentation prepends the `▁` word-boundary marker.
///
/// `Auto` (the default) prepends it exactly when the vocabulary contains at
/// least one marker-prefixed token, so published dumps work unchanged while
/// toy vocabularies stay simple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkerMode {
    #[default]
    Auto,
    Always,
    Never,
}

/// A unigram tokenizer vocabulary: unique tokens with finite scores on a
/// log-probability scale, plus an unk token. Immutable after construction;
/// [`protect_forms`] returns an updated copy.
#[derive(Debug, Clone)]
pub struct UnigramVocab {
    entries: Vec<(String, f64)>,
    index: HashMap<String, usize>,
    unk_token: String,
    marker_mode: MarkerMode,
    has_marker_tokens: bool,
    max_token_chars: usize,
}

impl UnigramVocab {
    /// Builds a vocabulary from `(token, score)` entries, appending an unk
    /// entry at `min_score - 10` when none is present.
    pub fn from_entries(entries: Vec<(String, f64)>) -> Result<Self, VocabError> {
        let mut out = Vec::with_capacity(entries.len() + 1);
        let mut index = HashMap::with_capacity(entries.len() + 1);
        for (i, (token, score)) in entries.into_iter().enumerate() {
            let token = nfc(&token);
            if token.is_empty() {
                return Err(VocabError::EmptyToken { line: i + 1 });
            }
            if !score.is_finite() {
                return Err(VocabError::NonFiniteScore { line: i + 1, token });
            }
            if let Some(&first) = index.get(&token) {
                return Err(VocabError::DuplicateToken { token, first: first + 1, second: i + 1 });
            }
            index.insert(token.clone(), out.len());
            out.push((token, score));
        }
        if !index.contains_key(DEFAULT_UNK_TOKEN) {
            let min = out.iter().map(|(_, s)| *s).fold(0.0_f64, f64::min);
            index.insert(DEFAULT_UNK_TOKEN.to_string(), out.len());
            out.push((DEFAULT_UNK_TOKEN.to_string(), min - UNK_PENALTY));
        }
        let has_marker_tokens = out.iter().any(|(t, _)| t.starts_with(WORD_MARKER));
        let max_token_chars = out.iter().map(|(t, _)| t.chars().count()).max().unwrap_or(1);
        Ok(UnigramVocab {
            entries: out,
            index,
            unk_token: DEFAULT_UNK_TOKEN.to_string(),
            marker_mode: MarkerMode::Auto,
            has_marker_tokens,
            max_token_chars,
        })
    }

    /// Parses the `token<TAB>score` one-per-line vocabulary dump format.
    pub fn from_reader<R: Read>(mut source: R) -> Result<Self, VocabError> {
        let mut buf = String::new();
        source.read_to_string(&mut buf)?;
        Self::from_tsv_str(&buf)
    }

    pub fn from_tsv_str(input: &str) -> Result<Self, VocabError> {
        let mut entries = Vec::new();
        let mut lines_of: HashMap<String, usize> = HashMap::new();
        for (idx, raw) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (token, score_str) = line.split_once('\t').ok_or(VocabError::BadLine { line: line_no })?;
            let token = nfc(token);
            if token.is_empty() {
                return Err(VocabError::EmptyToken { line: line_no });
            }
            let score: f64 = score_str
                .trim()
                .parse()
                .map_err(|_| VocabError::BadScore { line: line_no, score: score_str.to_string() })?;
            if !score.is_finite() {
                return Err(VocabError::NonFiniteScore { line: line_no, token });
            }
            if let Some(&first) = lines_of.get(&token) {
                return Err(VocabError::DuplicateToken { token, first, second: line_no });
            }
            lines_of.insert(token.clone(), line_no);
            entries.push((token, score));
        }
        Self::from_entries(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (token, score) in &self.entries {
            let _ = writeln!(out, "{token}\t{score}");
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn unk_token(&self) -> &str {
        &self.unk_token
    }

    pub fn unk_score(&self) -> f64 {
        self.entries[self.index[&self.unk_token]].1
    }

    pub fn score(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.entries[i].1)
    }

    pub(crate) fn lookup(&self, token: &str) -> Option<(usize, f64)> {
        self.index.get(token).map(|&i| (i, self.entries[i].1))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn max_token_chars(&self) -> usize {
        self.max_token_chars
    }

    pub fn set_marker_mode(&mut self, mode: MarkerMode) {
        self.marker_mode = mode;
    }

    /// Whether segmentation prepends the `▁` marker to isolated words.
    pub fn marker_active(&self) -> bool {
        match self.marker_mode {
            MarkerMode::Auto => self.has_marker_tokens,
            MarkerMode::Always => true,
            MarkerMode::Never => false,
        }
    }

    /// The text actually segmented for an isolated word.
    pub(crate) fn effective_text(&self, word: &str) -> String {
        let word = nfc(word);
        if self.marker_active() && !word.starts_with(WORD_MARKER) {
            let mut s = String::with_capacity(word.len() + 3);
            s.push(WORD_MARKER);
            s.push_str(&word);
            s
        } else {
            word
        }
    }

    fn upsert(&mut self, token: String, score: f64) {
        match self.index.get(&token) {
            Some(&i) => self.entries[i].1 = score,
            None => {
                self.max_token_chars = self.max_token_chars.max(token.chars().count());
                self.has_marker_tokens = self.has_marker_tokens || token.starts_with(WORD_MARKER);
                self.index.insert(token.clone(), self.entries.len());
                self.entries.push((token, score));
            }
        }
    }
}

/// Returns a new vocabulary in which every given form segments to exactly
/// one token.
///
/// Each form receives score `best prior segmentation + 1.0`, which strictly
/// dominates every multi-token cover. Forms are processed shortest first so
/// that a longer form's "prior best" already accounts for shorter protected
/// forms it contains; this keeps the single-token guarantee when protected
/// forms nest.
pub fn protect_forms<S: AsRef<str>>(vocab: &UnigramVocab, forms: &[S]) -> UnigramVocab {
    let mut updated = vocab.clone();
    let mut ordered: Vec<String> = forms.iter().map(|f| nfc(f.as_ref())).filter(|f| !f.is_empty()).collect();
    ordered.sort_by_key(|f| (f.chars().count(), f.clone()));
    ordered.dedup();
    for form in ordered {
        let text = updated.effective_text(&form);
        let best = segment::segment(&updated, &form).score;
        updated.upsert(text, best + 1.0);
    }
    updated
}

/// How forms are grouped in a [`TokenHistogram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramGrouping {
    ByGender,
    ByStereotype,
}

/// Group label for one histogram bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormClass {
    Male,
    Female,
    Pro,
    Anti,
}

impl std::fmt::Display for FormClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FormClass::Male => "male",
            FormClass::Female => "female",
            FormClass::Pro => "pro",
            FormClass::Anti => "anti",
        })
    }
}

/// Counts of lexicon forms bucketed by the number of tokens they split into.
#[derive(Debug, Clone)]
pub struct TokenHistogram {
    pub grouping: HistogramGrouping,
    /// (group, n_tokens) → number of forms.
    pub buckets: BTreeMap<(FormClass, usize), u64>,
    /// Entries skipped because their stereotype label is neutral (only under
    /// by-stereotype grouping).
    pub skipped_neutral: usize,
}

/// One histogram bucket in serialization-friendly row form.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramRow {
    pub group: FormClass,
    pub n_tokens: usize,
    pub count: u64,
}

impl TokenHistogram {
    pub fn rows(&self) -> Vec<HistogramRow> {
        self.buckets
            .iter()
            .map(|(&(group, n_tokens), &count)| HistogramRow { group, n_tokens, count })
            .collect()
    }

    pub fn total_forms(&self) -> u64 {
        self.buckets.values().sum()
    }

    /// Mean token count over the forms of one group, if any were bucketed.
    pub fn mean_tokens(&self, class: FormClass) -> Option<f64> {
        let mut n = 0u64;
        let mut sum = 0u64;
        for (&(c, tokens), &count) in &self.buckets {
            if c == class {
                n += count;
                sum += tokens as u64 * count;
            }
        }
        (n > 0).then(|| sum as f64 / n as f64)
    }

    /// CSV rows `group,n_tokens,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,n_tokens,count\n");
        for (&(class, tokens), &count) in &self.buckets {
            let _ = writeln!(out, "{class},{tokens},{count}");
        }
        out
    }
}

/// Tokenizes every form of every pair in the lexicon and buckets the counts.
///
/// Under by-gender grouping the buckets are male/female; under by-stereotype
/// grouping a form is pro-stereotypical when its gender slot equals the
/// profession's stereotype label, and neutral-stereotype entries are skipped.
pub fn token_histogram(
    vocab: &UnigramVocab,
    lex: &ProfessionLexicon,
    grouping: HistogramGrouping,
) -> TokenHistogram {
    let mut buckets: BTreeMap<(FormClass, usize), u64> = BTreeMap::new();
    let mut skipped_neutral = 0;
    for entry in &lex.entries {
        for pair in &entry.pairs {
            let male_tokens = segment::count_tokens(vocab, &pair.male_form);
            let female_tokens = segment::count_tokens(vocab, &pair.female_form);
            match grouping {
                HistogramGrouping::ByGender => {
                    *buckets.entry((FormClass::Male, male_tokens)).or_insert(0) += 1;
                    *buckets.entry((FormClass::Female, female_tokens)).or_insert(0) += 1;
                }
                HistogramGrouping::ByStereotype => match entry.stereotype {
                    Stereotype::Male => {
                        *buckets.entry((FormClass::Pro, male_tokens)).or_insert(0) += 1;
                        *buckets.entry((FormClass::Anti, female_tokens)).or_insert(0) += 1;
                    }
                    Stereotype::Female => {
                        *buckets.entry((FormClass::Pro, female_tokens)).or_insert(0) += 1;
                        *buckets.entry((FormClass::Anti, male_tokens)).or_insert(0) += 1;
                    }
                    Stereotype::Neutral => {
                        skipped_neutral += 1;
                    }
                },
            }
        }
    }
    TokenHistogram { grouping, buckets, skipped_neutral }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::ProfessionLexicon;

    fn vocab(entries: &[(&str, f64)]) -> UnigramVocab {
        UnigramVocab::from_entries(entries.iter().map(|(t, s)| (t.to_string(), *s)).collect()).unwrap()
    }

    #[test]
    fn loads_three_tokens_plus_unk() {
        let v = UnigramVocab::from_tsv_str("a\t-1.0\nb\t-1.0\nab\t-1.5\n").unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.contains("<unk>"));
        assert_eq!(v.unk_score(), -1.5 - 10.0);
    }

    #[test]
    fn empty_stream_yields_unk_only() {
        let v = UnigramVocab::from_tsv_str("").unwrap();
        assert_eq!(v.len(), 1);
        assert!(v.contains("<unk>"));
    }

    #[test]
    fn duplicate_token_rejected() {
        let err = UnigramVocab::from_tsv_str("a\t-1.0\na\t-1.0\n").unwrap_err();
        match err {
            VocabError::DuplicateToken { token, first, second } => {
                assert_eq!(token, "a");
                assert_eq!((first, second), (1, 2));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn bad_score_rejected() {
        let err = UnigramVocab::from_tsv_str("a\tnot-a-number\n").unwrap_err();
        assert!(matches!(err, VocabError::BadScore { line: 1, .. }), "{err}");
    }

    #[test]
    fn explicit_unk_score_kept() {
        let v = UnigramVocab::from_tsv_str("<unk>\t-3.0\na\t-1.0\n").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.unk_score(), -3.0);
    }

    #[test]
    fn vocab_tsv_round_trip() {
        let v = UnigramVocab::from_tsv_str("a\t-1.0\nb\t-2.25\nab\t-1.5\n").unwrap();
        let reloaded = UnigramVocab::from_tsv_str(&v.to_tsv()).unwrap();
        assert_eq!(v.entries(), reloaded.entries());
    }

    #[test]
    fn protect_gives_single_token() {
        let v = vocab(&[("a", -1.0), ("b", -1.0)]);
        let p = protect_forms(&v, &["ab"]);
        assert_eq!(p.score("ab"), Some(-1.0)); // (-2.0) + 1.0
        assert_eq!(count_tokens(&p, "ab"), 1);
        // unrelated entries unchanged
        assert_eq!(p.score("a"), Some(-1.0));
        assert_eq!(p.score("b"), Some(-1.0));
    }

    #[test]
    fn protect_nested_forms_all_single() {
        let v = vocab(&[("a", -1.0), ("b", -1.0), ("c", -1.0), ("d", -1.0)]);
        let p = protect_forms(&v, &["ab", "cd", "abcd"]);
        for form in ["ab", "cd", "abcd"] {
            assert_eq!(count_tokens(&p, form), 1, "form {form}");
        }
    }

    #[test]
    fn protect_paper_example_form() {
        let v = vocab(&[("Arzt", -3.0), ("Ärzt", -4.0), ("in", -2.0)]);
        let p = protect_forms(&v, &["Ärztin"]);
        assert_eq!(count_tokens(&p, "Ärztin"), 1);
    }

    #[test]
    fn protect_respects_marker_mode() {
        let v = UnigramVocab::from_tsv_str("\u{2581}Arzt\t-3.0\nin\t-2.0\n").unwrap();
        assert!(v.marker_active());
        let p = protect_forms(&v, &["Ärztin"]);
        assert!(p.contains("\u{2581}Ärztin"));
        assert_eq!(count_tokens(&p, "Ärztin"), 1);
    }

    #[test]
    fn histogram_by_gender_and_stereotype() {
        let lex = ProfessionLexicon::from_tsv_str("physician\tmale\tarzt\tärztin\n").unwrap();
        // arzt is one token; ärztin splits into ärzt + in
        let v = vocab(&[("arzt", -1.0), ("ärzt", -2.0), ("in", -1.0)]);
        let by_gender = token_histogram(&v, &lex, HistogramGrouping::ByGender);
        assert_eq!(by_gender.buckets[&(FormClass::Male, 1)], 1);
        assert_eq!(by_gender.buckets[&(FormClass::Female, 2)], 1);
        assert_eq!(by_gender.total_forms(), 2);

        let by_stereo = token_histogram(&v, &lex, HistogramGrouping::ByStereotype);
        assert_eq!(by_stereo.buckets[&(FormClass::Pro, 1)], 1);
        assert_eq!(by_stereo.buckets[&(FormClass::Anti, 2)], 1);
    }

    #[test]
    fn histogram_skips_neutral_for_stereotype_grouping() {
        let lex = ProfessionLexicon::from_tsv_str("clerk\tneutral\ta\tb\n").unwrap();
        let v = vocab(&[("a", -1.0), ("b", -1.0)]);
        let h = token_histogram(&v, &lex, HistogramGrouping::ByStereotype);
        assert!(h.buckets.is_empty());
        assert_eq!(h.skipped_neutral, 1);
    }

    #[test]
    fn empty_lexicon_empty_histogram() {
        let lex = ProfessionLexicon::from_tsv_str("").unwrap();
        let v = vocab(&[("a", -1.0)]);
        let h = token_histogram(&v, &lex, HistogramGrouping::ByGender);
        assert!(h.buckets.is_empty());
        assert_eq!(h.total_forms(), 0);
    }
}
