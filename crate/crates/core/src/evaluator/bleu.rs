//! Corpus-level BLEU for translation-quality monitoring.
//!
//! 4-gram BLEU with clipped counts pooled over the corpus, add-ε smoothing
//! (ε = 0.1 counts) for n-gram orders with zero matches, and the standard
//! brevity penalty capped at 1. Tokenization is the shared word-boundary
//! rule, NFC-normalized and case-sensitive. A fixed, documented variant so
//! scores are bit-reproducible.

use std::collections::HashMap;

use serde::Serialize;

use crate::evaluator::EvalError;
use crate::text::{split_words, Normalization};

const MAX_ORDER: usize = 4;
const EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuScore {
    /// 0..=100; brevity penalty times the geometric mean of the smoothed
    /// n-gram precisions, times 100.
    pub score: f64,
    pub ngram_precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hypothesis_tokens: u64,
    pub reference_tokens: u64,
}

/// Corpus BLEU over positionally aligned hypothesis/reference segments.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(hypotheses: &[S], references: &[T]) -> Result<BleuScore, EvalError> {
    if hypotheses.len() != references.len() {
        return Err(EvalError::LengthMismatch { instances: references.len(), outputs: hypotheses.len() });
    }
    if hypotheses.is_empty() {
        return Err(EvalError::Parse { line: 0, msg: "BLEU needs at least one segment".into() });
    }
    let norm = Normalization::default();

    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let mut hyp_len: u64 = 0;
    let mut ref_len: u64 = 0;

    for (hyp, reference) in hypotheses.iter().zip(references) {
        let hyp_line = norm.apply(hyp.as_ref());
        let ref_line = norm.apply(reference.as_ref());
        let hyp_words = split_words(&hyp_line);
        let ref_words = split_words(&ref_line);
        hyp_len += hyp_words.len() as u64;
        ref_len += ref_words.len() as u64;

        for n in 1..=MAX_ORDER {
            let ref_ngrams = ngram_counts(&ref_words, n);
            for (ngram, count) in ngram_counts(&hyp_words, n) {
                totals[n - 1] += count;
                if let Some(&ref_count) = ref_ngrams.get(&ngram) {
                    matches[n - 1] += count.min(ref_count);
                }
            }
        }
    }

    let mut precisions = [0.0; MAX_ORDER];
    let mut log_sum = 0.0;
    for n in 0..MAX_ORDER {
        let p = if totals[n] == 0 {
            // every hypothesis is shorter than this order; treat as neutral
            1.0
        } else if matches[n] == 0 {
            EPSILON / totals[n] as f64
        } else {
            matches[n] as f64 / totals[n] as f64
        };
        precisions[n] = p;
        log_sum += p.ln();
    }

    let brevity_penalty = if hyp_len == 0 {
        if ref_len == 0 {
            1.0
        } else {
            0.0
        }
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };

    Ok(BleuScore {
        score: brevity_penalty * (log_sum / MAX_ORDER as f64).exp() * 100.0,
        ngram_precisions: precisions,
        brevity_penalty,
        hypothesis_tokens: hyp_len,
        reference_tokens: ref_len,
    })
}

fn ngram_counts<'a>(words: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], u64> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for window in words.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scores_100() {
        let segs = vec!["der Arzt ist hier und arbeitet viel", "die Ärztin kommt morgen früh"];
        let b = bleu(&segs, &segs).unwrap();
        assert_eq!(b.score, 100.0);
        assert_eq!(b.brevity_penalty, 1.0);
        assert_eq!(b.ngram_precisions, [1.0; 4]);
    }

    #[test]
    fn identity_with_short_segments_still_100() {
        let segs = vec!["hallo", "Welt"];
        let b = bleu(&segs, &segs).unwrap();
        assert_eq!(b.score, 100.0);
    }

    #[test]
    fn disjoint_corpus_scores_below_one() {
        // the smoothed floor is ε / total n-grams per order, so a corpus of a
        // few dozen tokens already lands well under 1
        let hyp: Vec<String> = (0..4)
            .map(|s| (0..10).map(|i| format!("h{s}x{i}")).collect::<Vec<_>>().join(" "))
            .collect();
        let reference: Vec<String> = (0..4)
            .map(|s| (0..10).map(|i| format!("r{s}y{i}")).collect::<Vec<_>>().join(" "))
            .collect();
        let b = bleu(&hyp, &reference).unwrap();
        assert!(b.score > 0.0, "smoothing keeps the score above zero");
        assert!(b.score < 1.0, "got {}", b.score);
    }

    #[test]
    fn half_length_brevity_penalty() {
        let reference = vec!["a b c d e f g h"];
        let hyp = vec!["a b c d"];
        let b = bleu(&hyp, &reference).unwrap();
        assert!((b.brevity_penalty - (1.0f64 - 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_error() {
        let err = bleu(&["a"], &["a", "b"]).unwrap_err();
        assert!(matches!(err, EvalError::LengthMismatch { .. }), "{err}");
    }

    #[test]
    fn segment_order_invariant() {
        let hyp = vec!["der Arzt kommt", "die Ärztin geht jetzt nach Hause"];
        let refs = vec!["der Arzt geht", "die Ärztin geht jetzt nach Haus"];
        let a = bleu(&hyp, &refs).unwrap();
        let rev_h: Vec<&str> = hyp.iter().rev().cloned().collect();
        let rev_r: Vec<&str> = refs.iter().rev().cloned().collect();
        let b = bleu(&rev_h, &rev_r).unwrap();
        assert_eq!(a.score, b.score);
    }
}
