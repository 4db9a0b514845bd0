//! Desk-scale unigram vocabulary training.
//!
//! Seeds with the most frequent substrings of the corpus, alternates hard-EM
//! (Viterbi counts, then log relative-frequency rescoring), and prunes the
//! lowest-value tokens until the size target is met. Single characters are
//! never pruned, so segmentation stays total. Deterministic given identical
//! inputs.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use thiserror::Error;

use super::segment::segment;
use super::UnigramVocab;
use crate::text::{nfc, split_words};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("target vocabulary size {target} is below the corpus alphabet size {alphabet}")]
    TargetBelowAlphabet { target: usize, alphabet: usize },
    #[error("corpus contains no words")]
    EmptyCorpus,
    #[error("prune_fraction must lie in (0, 1), got {0}")]
    BadPruneFraction(f64),
    #[error("max_token_length must be at least 1")]
    BadMaxTokenLength,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct TrainParams {
    /// Number of most-frequent substrings used as the seed vocabulary.
    pub seed_size: usize,
    /// Hard-EM iterations after seeding.
    pub em_iterations: usize,
    /// Fraction of removable tokens dropped per pruning round.
    pub prune_fraction: f64,
    /// Longest substring considered as a token candidate, in characters.
    pub max_token_length: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams { seed_size: 2000, em_iterations: 4, prune_fraction: 0.2, max_token_length: 8 }
    }
}

/// Trains a unigram vocabulary of at most `target_vocab_size` tokens (the unk
/// entry aside) over the words of `corpus`.
pub fn train_unigram<R: Read>(
    mut corpus: R,
    target_vocab_size: usize,
    params: &TrainParams,
) -> Result<UnigramVocab, TrainError> {
    if !(params.prune_fraction > 0.0 && params.prune_fraction < 1.0) {
        return Err(TrainError::BadPruneFraction(params.prune_fraction));
    }
    if params.max_token_length == 0 {
        return Err(TrainError::BadMaxTokenLength);
    }

    let mut text = String::new();
    corpus.read_to_string(&mut text)?;

    // word frequencies; BTreeMap keeps every later pass deterministic
    let mut word_counts: BTreeMap<String, u64> = BTreeMap::new();
    for line in text.lines() {
        let line = nfc(line);
        for word in split_words(&line) {
            *word_counts.entry(word.to_string()).or_insert(0) += 1;
        }
    }
    if word_counts.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }

    let alphabet: BTreeMap<char, u64> = {
        let mut chars = BTreeMap::new();
        for (word, &count) in &word_counts {
            for c in word.chars() {
                *chars.entry(c).or_insert(0) += count;
            }
        }
        chars
    };
    if target_vocab_size < alphabet.len() {
        return Err(TrainError::TargetBelowAlphabet { target: target_vocab_size, alphabet: alphabet.len() });
    }

    let mut entries = seed_vocab(&word_counts, &alphabet, params);
    run_em(&mut entries, &word_counts, params.em_iterations);

    // prune until the target holds, refreshing scores between rounds
    loop {
        let size = entries.len();
        if size <= target_vocab_size {
            break;
        }
        let removable: Vec<&String> =
            entries.keys().filter(|t| t.chars().count() > 1).collect();
        if removable.is_empty() {
            break;
        }
        let excess = size - target_vocab_size;
        let round = excess.min(((removable.len() as f64 * params.prune_fraction).floor() as usize).max(1));

        let usage = viterbi_counts(&entries, &word_counts);
        let mut losses: Vec<(f64, String)> = removable
            .into_iter()
            .map(|t| {
                let count = usage.get(t.as_str()).copied().unwrap_or(0);
                let loss = if count == 0 {
                    0.0
                } else {
                    let kept = entries[t];
                    let alt = best_score_excluding(&entries, t, Some(t.as_str()), params.max_token_length);
                    count as f64 * (kept - alt)
                };
                (loss, t.clone())
            })
            .collect();
        losses.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
        for (_, token) in losses.into_iter().take(round) {
            entries.remove(&token);
        }
        run_em(&mut entries, &word_counts, 1);
    }

    let final_entries: Vec<(String, f64)> = {
        let mut v: Vec<(String, f64)> = entries.into_iter().collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        v
    };
    Ok(UnigramVocab::from_entries(final_entries).expect("trained entries are unique, non-empty, finite"))
}

/// All corpus characters plus the `seed_size` most frequent substrings up to
/// `max_token_length`, scored by log relative frequency.
fn seed_vocab(
    word_counts: &BTreeMap<String, u64>,
    alphabet: &BTreeMap<char, u64>,
    params: &TrainParams,
) -> BTreeMap<String, f64> {
    let mut substr_counts: BTreeMap<String, u64> = BTreeMap::new();
    for (word, &count) in word_counts {
        let chars: Vec<char> = word.chars().collect();
        for start in 0..chars.len() {
            for len in 2..=params.max_token_length.min(chars.len() - start) {
                let sub: String = chars[start..start + len].iter().collect();
                *substr_counts.entry(sub).or_insert(0) += count;
            }
        }
    }
    let mut ranked: Vec<(&String, &u64)> = substr_counts.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));

    let mut seeded: BTreeMap<String, u64> = alphabet.iter().map(|(&c, &n)| (c.to_string(), n)).collect();
    for (sub, &count) in ranked.into_iter().take(params.seed_size) {
        seeded.insert(sub.clone(), count);
    }
    let total: u64 = seeded.values().sum();
    seeded
        .into_iter()
        .map(|(t, c)| (t, (c as f64 / total as f64).ln()))
        .collect()
}

fn run_em(entries: &mut BTreeMap<String, f64>, word_counts: &BTreeMap<String, u64>, iterations: usize) {
    for _ in 0..iterations {
        let usage = viterbi_counts(entries, word_counts);
        let total: u64 = usage.values().sum();
        if total == 0 {
            return;
        }
        let mut min_used = f64::INFINITY;
        let mut scores: BTreeMap<String, f64> = BTreeMap::new();
        for token in entries.keys() {
            if let Some(&count) = usage.get(token.as_str()) {
                let score = (count as f64 / total as f64).ln();
                min_used = min_used.min(score);
                scores.insert(token.clone(), score);
            }
        }
        let floor = min_used - 10.0;
        for (token, score) in entries.iter_mut() {
            *score = scores.get(token).copied().unwrap_or(floor);
        }
    }
}

/// Hard E-step: Viterbi token-usage counts over the corpus.
fn viterbi_counts(entries: &BTreeMap<String, f64>, word_counts: &BTreeMap<String, u64>) -> HashMap<String, u64> {
    let vocab = UnigramVocab::from_entries(entries.iter().map(|(t, s)| (t.clone(), *s)).collect())
        .expect("training entries are valid");
    let mut usage: HashMap<String, u64> = HashMap::new();
    for (word, &count) in word_counts {
        for token in segment(&vocab, word).tokens {
            *usage.entry(token).or_insert(0) += count;
        }
    }
    usage
}

/// Best segmentation score of `text` using `entries` minus `exclude`.
/// Single characters are always available, so a cover always exists.
fn best_score_excluding(
    entries: &BTreeMap<String, f64>,
    text: &str,
    exclude: Option<&str>,
    max_token_length: usize,
) -> f64 {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    best[n] = 0.0;
    for i in (0..n).rev() {
        for len in 1..=max_token_length.min(n - i) {
            let piece: String = chars[i..i + len].iter().collect();
            if exclude == Some(piece.as_str()) {
                continue;
            }
            if let Some(&score) = entries.get(&piece) {
                if best[i + len] > f64::NEG_INFINITY {
                    best[i] = best[i].max(score + best[i + len]);
                }
            }
        }
    }
    best[0]
}
