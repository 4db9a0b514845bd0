//! Viterbi (maximum-score) segmentation over a unigram vocabulary.

use serde::Serialize;

use super::UnigramVocab;

/// One optimal segmentation of a word.
///
/// `tokens` holds vocabulary token texts, with the unk token standing in for
/// each character no vocabulary token covers; `surfaces` holds the text each
/// token covered, so `surfaces.concat()` reproduces the segmented text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segmentation {
    pub tokens: Vec<String>,
    pub surfaces: Vec<String>,
    pub score: f64,
    pub n_tokens: usize,
}

impl Segmentation {
    pub fn reconstruct(&self) -> String {
        self.surfaces.concat()
    }
}

#[derive(Clone, Copy)]
enum Piece {
    Vocab(usize),
    Unk,
}

#[derive(Clone, Copy)]
struct Node {
    score: f64,
    n_tokens: u32,
    len_chars: usize,
    piece: Piece,
}

/// Segments `word` into the cover of vocabulary tokens maximizing the score
/// sum.
///
/// A character whose one-character substring is not in the vocabulary may be
/// covered by one unk token carrying the unk score, which keeps segmentation
/// total for every input. Ties are broken by fewest tokens, then by the
/// longest first token (applied left to right).
pub fn segment(vocab: &UnigramVocab, word: &str) -> Segmentation {
    let text = vocab.effective_text(word);
    if text.is_empty() {
        return Segmentation { tokens: vec![], surfaces: vec![], score: 0.0, n_tokens: 0 };
    }

    let mut bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    bounds.push(text.len());
    let n_chars = bounds.len() - 1;
    let max_len = vocab.max_token_chars().min(n_chars);
    let unk_score = vocab.unk_score();

    // best[i] = optimal segmentation of the suffix starting at char i
    let mut best: Vec<Option<Node>> = vec![None; n_chars + 1];
    best[n_chars] = Some(Node { score: 0.0, n_tokens: 0, len_chars: 0, piece: Piece::Unk });

    for i in (0..n_chars).rev() {
        let mut chosen: Option<Node> = None;
        let mut single_char_in_vocab = false;
        for len in 1..=max_len.min(n_chars - i) {
            let piece_text = &text[bounds[i]..bounds[i + len]];
            let Some((idx, score)) = vocab.lookup(piece_text) else { continue };
            if len == 1 {
                single_char_in_vocab = true;
            }
            let Some(rest) = best[i + len] else { continue };
            consider(
                &mut chosen,
                Node {
                    score: score + rest.score,
                    n_tokens: 1 + rest.n_tokens,
                    len_chars: len,
                    piece: Piece::Vocab(idx),
                },
            );
        }
        if !single_char_in_vocab {
            if let Some(rest) = best[i + 1] {
                consider(
                    &mut chosen,
                    Node {
                        score: unk_score + rest.score,
                        n_tokens: 1 + rest.n_tokens,
                        len_chars: 1,
                        piece: Piece::Unk,
                    },
                );
            }
        }
        best[i] = chosen;
    }

    let mut tokens = Vec::new();
    let mut surfaces = Vec::new();
    let mut pos = 0;
    while pos < n_chars {
        let node = best[pos].expect("unk fallback keeps every suffix segmentable");
        let surface = text[bounds[pos]..bounds[pos + node.len_chars]].to_string();
        match node.piece {
            Piece::Vocab(idx) => tokens.push(vocab.entries()[idx].0.clone()),
            Piece::Unk => tokens.push(vocab.unk_token().to_string()),
        }
        surfaces.push(surface);
        pos += node.len_chars;
    }
    let root = best[0].expect("non-empty input always segments");
    Segmentation { tokens, surfaces, score: root.score, n_tokens: root.n_tokens as usize }
}

fn consider(chosen: &mut Option<Node>, cand: Node) {
    let better = match chosen {
        None => true,
        Some(cur) => {
            cand.score > cur.score
                || (cand.score == cur.score
                    && (cand.n_tokens < cur.n_tokens
                        || (cand.n_tokens == cur.n_tokens && cand.len_chars > cur.len_chars)))
        }
    };
    if better {
        *chosen = Some(cand);
    }
}

/// Number of tokens the word splits into (`segment(vocab, word).n_tokens`).
pub fn count_tokens(vocab: &UnigramVocab, word: &str) -> usize {
    segment(vocab, word).n_tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::UnigramVocab;

    fn vocab(entries: &[(&str, f64)]) -> UnigramVocab {
        UnigramVocab::from_entries(entries.iter().map(|(t, s)| (t.to_string(), *s)).collect()).unwrap()
    }

    /// Exhaustive oracle over all covers allowed by the segmentation rule:
    /// returns the maximum achievable score, or None when the word cannot be
    /// covered (never happens with the unk fallback).
    fn enumerate_best(vocab: &UnigramVocab, text: &str) -> f64 {
        fn rec(vocab: &UnigramVocab, chars: &[char], acc: f64, best: &mut f64) {
            if chars.is_empty() {
                if acc > *best {
                    *best = acc;
                }
                return;
            }
            for len in 1..=chars.len() {
                let piece: String = chars[..len].iter().collect();
                if let Some(score) = vocab.score(&piece) {
                    rec(vocab, &chars[len..], acc + score, best);
                }
            }
            let single: String = chars[..1].iter().collect();
            if vocab.score(&single).is_none() {
                rec(vocab, &chars[1..], acc + vocab.unk_score(), best);
            }
        }
        let chars: Vec<char> = text.chars().collect();
        let mut best = f64::NEG_INFINITY;
        rec(vocab, &chars, 0.0, &mut best);
        best
    }

    #[test]
    fn prefers_single_token_when_score_wins() {
        let v = vocab(&[("a", -1.0), ("b", -1.0), ("ab", -1.5)]);
        let seg = segment(&v, "ab");
        assert_eq!(seg.tokens, vec!["ab"]);
        assert_eq!(seg.score, -1.5);
        assert_eq!(seg.n_tokens, 1);
        assert_eq!(seg.score, enumerate_best(&v, "ab"));
    }

    #[test]
    fn single_token_identity() {
        let v = vocab(&[("a", -1.0)]);
        let seg = segment(&v, "a");
        assert_eq!(seg.tokens, vec!["a"]);
        assert_eq!(seg.n_tokens, 1);
    }

    #[test]
    fn unknown_char_becomes_unk() {
        let v = vocab(&[("a", -1.0)]);
        assert_eq!(v.unk_score(), -11.0);
        let seg = segment(&v, "ax");
        assert_eq!(seg.tokens, vec!["a", "<unk>"]);
        assert_eq!(seg.n_tokens, 2);
        assert_eq!(seg.surfaces, vec!["a", "x"]);
        assert_eq!(seg.reconstruct(), "ax");
    }

    #[test]
    fn one_unk_per_uncovered_char() {
        let v = vocab(&[("a", -1.0)]);
        let seg = segment(&v, "xy");
        assert_eq!(seg.tokens, vec!["<unk>", "<unk>"]);
        assert_eq!(seg.reconstruct(), "xy");
    }

    #[test]
    fn count_tokens_matches_examples() {
        let v = vocab(&[("a", -1.0), ("b", -1.0), ("ab", -1.5)]);
        assert_eq!(count_tokens(&v, "ab"), 1);
        assert_eq!(count_tokens(&v, "abab"), 2);
        let no_multi = vocab(&[("a", -1.0), ("b", -1.0)]);
        assert_eq!(count_tokens(&no_multi, "ab"), 2);
    }

    #[test]
    fn tie_broken_by_fewest_tokens() {
        let v = vocab(&[("a", -1.0), ("b", -1.0), ("ab", -2.0)]);
        let seg = segment(&v, "ab");
        assert_eq!(seg.tokens, vec!["ab"]);
    }

    #[test]
    fn tie_broken_by_longest_first_token() {
        let v = vocab(&[("a", -1.0), ("b", -1.0), ("c", -1.0), ("ab", -2.0), ("bc", -2.0)]);
        let seg = segment(&v, "abc");
        assert_eq!(seg.score, -3.0);
        assert_eq!(seg.tokens, vec!["ab", "c"]);
    }

    #[test]
    fn multibyte_words_segment_and_reconstruct() {
        let v = vocab(&[("Ärzt", -2.0), ("in", -1.0), ("Arzt", -1.5)]);
        let seg = segment(&v, "Ärztin");
        assert_eq!(seg.tokens, vec!["Ärzt", "in"]);
        assert_eq!(seg.reconstruct(), "Ärztin");
        assert_eq!(seg.score, enumerate_best(&v, "Ärztin"));
    }

    #[test]
    fn marker_prepended_only_when_vocab_uses_it() {
        let plain = vocab(&[("arzt", -1.0)]);
        assert_eq!(segment(&plain, "arzt").reconstruct(), "arzt");

        let marked = vocab(&[("\u{2581}arzt", -1.0), ("arzt", -2.0)]);
        let seg = segment(&marked, "arzt");
        assert_eq!(seg.tokens, vec!["\u{2581}arzt"]);
        assert_eq!(seg.reconstruct(), "\u{2581}arzt");
    }

    #[test]
    fn matches_enumeration_on_dense_vocab() {
        let v = vocab(&[
            ("a", -0.8),
            ("b", -1.1),
            ("c", -0.9),
            ("ab", -1.6),
            ("bc", -1.4),
            ("abc", -2.7),
            ("ca", -1.2),
        ]);
        for word in ["abcabc", "cab", "abca", "ccc", "bACab"] {
            let seg = segment(&v, word);
            assert_eq!(seg.score, enumerate_best(&v, word), "word {word}");
            assert_eq!(seg.reconstruct(), word, "word {word}");
        }
    }

    #[test]
    fn empty_word_is_empty_segmentation() {
        let v = vocab(&[("a", -1.0)]);
        let seg = segment(&v, "");
        assert_eq!(seg.n_tokens, 0);
        assert!(seg.tokens.is_empty());
    }
}
