//! Analysis toolkit for gender bias in machine-translation output and its
//! relation to subword tokenization and training-corpus frequency.
//!
//! The crate is organized around the analysis pipeline:
//!
//! * [`lexicon`] — attested gendered profession translations with stereotype labels.
//! * [`tokenizer`] — unigram-LM subword segmentation: vocabulary I/O, Viterbi
//!   segmentation, token-count histograms, vocabulary protection, and
//!   desk-scale vocabulary training.
//! * [`corpus`] — surface-form frequency tables over large text corpora.
//! * [`evaluator`] — scoring translation output against gold gender
//!   (recall/precision/F1, accuracy, ΔG, ΔS) plus corpus BLEU.
//! * [`metrics`] — per-pair records joining F1, token counts, and frequency
//!   (ΔG, ΔS, ΔT_G, ΔT_S).
//! * [`stats`] — Pearson correlation, the Jonckheere-Terpstra trend test, and
//!   the frequency-stratified conditional-independence procedure.
//! * [`dataset_gen`] — gender-balanced bilingual template datasets.

pub mod corpus;
pub mod dataset_gen;
pub mod evaluator;
pub mod lexicon;
pub mod metrics;
pub mod stats;
pub mod text;
pub mod tokenizer;

pub use lexicon::{Gender, ProfessionEntry, ProfessionLexicon, Stereotype, TranslationPair};
pub use text::Normalization;
pub use tokenizer::{Segmentation, UnigramVocab};
