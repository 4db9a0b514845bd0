//! Corpus scanning: surface-form frequency tables and gender-form ratio
//! reports over one-sentence-per-line text files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::ProfessionLexicon;
use crate::text::{split_words, Normalization};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: u64 },
    #[error("cannot merge tables with different normalization ({0:?} vs {1:?})")]
    NormalizationMismatch(Normalization, Normalization),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exact surface-form occurrence counts over a corpus.
///
/// Words are maximal runs of Unicode letters/marks with internal apostrophes;
/// the stored normalization was applied to every counted form and must be
/// applied to query forms as well (see [`FrequencyTable::query`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    pub total_tokens: u64,
    pub n_lines: u64,
    pub normalization: Normalization,
}

impl FrequencyTable {
    pub fn new(normalization: Normalization) -> Self {
        FrequencyTable { counts: HashMap::new(), total_tokens: 0, n_lines: 0, normalization }
    }

    pub fn count(&self, form: &str) -> u64 {
        self.counts.get(form).copied().unwrap_or(0)
    }

    pub fn n_distinct_forms(&self) -> usize {
        self.counts.len()
    }

    fn add_line(&mut self, line: &str) {
        let normalized = self.normalization.apply(line);
        for word in split_words(&normalized) {
            *self.counts.entry(word.to_string()).or_insert(0) += 1;
            self.total_tokens += 1;
        }
        self.n_lines += 1;
    }

    /// Pointwise addition of counts; both tables must share normalization.
    pub fn merge(mut self, other: FrequencyTable) -> Result<FrequencyTable, CorpusError> {
        if self.normalization != other.normalization {
            return Err(CorpusError::NormalizationMismatch(self.normalization, other.normalization));
        }
        for (form, count) in other.counts {
            *self.counts.entry(form).or_insert(0) += count;
        }
        self.total_tokens += other.total_tokens;
        self.n_lines += other.n_lines;
        Ok(self)
    }

    /// TSV export, `form<TAB>count`, sorted by descending count then form.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&String, &u64)> = self.counts.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let mut out = String::new();
        for (form, count) in rows {
            let _ = writeln!(out, "{form}\t{count}");
        }
        out
    }

    /// Looks up each form after applying the table's normalization. Absent
    /// forms map to 0. When `strip_prefixes` is non-empty, occurrences of
    /// `prefix + form` (single attached clitics, e.g. Hebrew definiteness)
    /// are added to the form's count.
    pub fn query<S: AsRef<str>>(&self, forms: &[S], strip_prefixes: &[String]) -> HashMap<String, u64> {
        let mut out = HashMap::with_capacity(forms.len());
        for form in forms {
            let normalized = self.normalization.apply(form.as_ref());
            let mut count = self.count(&normalized);
            for prefix in strip_prefixes {
                let prefixed = self.normalization.apply(&format!("{prefix}{normalized}"));
                count += self.count(&prefixed);
            }
            out.insert(normalized, count);
        }
        out
    }
}

/// Builds a frequency table over a line stream. Invalid UTF-8 is an error
/// naming the byte offset of the first bad byte.
pub fn build_frequency_table<R: Read>(
    source: R,
    normalization: Normalization,
) -> Result<FrequencyTable, CorpusError> {
    let mut reader = BufReader::new(source);
    let mut table = FrequencyTable::new(normalization);
    let mut raw = Vec::new();
    let mut offset: u64 = 0;
    loop {
        raw.clear();
        let n = reader.read_until(b'\n', &mut raw)?;
        if n == 0 {
            break;
        }
        let mut bytes: &[u8] = &raw;
        if bytes.last() == Some(&b'\n') {
            bytes = &bytes[..bytes.len() - 1];
        }
        if bytes.last() == Some(&b'\r') {
            bytes = &bytes[..bytes.len() - 1];
        }
        let line = std::str::from_utf8(bytes)
            .map_err(|e| CorpusError::InvalidUtf8 { offset: offset + e.valid_up_to() as u64 })?;
        table.add_line(line);
        offset += n as u64;
    }
    Ok(table)
}

/// Convenience for in-memory corpora.
pub fn frequency_table_from_str(corpus: &str, normalization: Normalization) -> FrequencyTable {
    let mut table = FrequencyTable::new(normalization);
    for line in corpus.lines() {
        table.add_line(line);
    }
    table
}

/// Batch lookup; absent forms map to 0.
pub fn query_frequency<S: AsRef<str>>(table: &FrequencyTable, forms: &[S]) -> HashMap<String, u64> {
    table.query(forms, &[])
}

/// Per-profession and aggregate male/female/neutral counts plus the scaled
/// ratio string (neutral:female:male, smallest nonzero component scaled to 1).
#[derive(Debug, Clone, Serialize)]
pub struct FormRatioReport {
    pub per_profession: Vec<ProfessionFormCounts>,
    pub male_total: u64,
    pub female_total: u64,
    /// Absent when no neutral forms were supplied.
    pub neutral_total: Option<u64>,
    pub ratio_string: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfessionFormCounts {
    pub english: String,
    pub male: u64,
    pub female: u64,
}

/// Aggregates corpus counts of every male form, every female form, and the
/// supplied neutral forms.
pub fn form_ratio<S: AsRef<str>>(
    table: &FrequencyTable,
    lex: &ProfessionLexicon,
    neutral_forms: Option<&[S]>,
) -> FormRatioReport {
    let mut per_profession = Vec::with_capacity(lex.entries.len());
    let mut male_total = 0;
    let mut female_total = 0;
    for entry in &lex.entries {
        let mut male = 0;
        let mut female = 0;
        for pair in &entry.pairs {
            male += table.query(&[pair.male_form.as_str()], &[]).values().sum::<u64>();
            female += table.query(&[pair.female_form.as_str()], &[]).values().sum::<u64>();
        }
        male_total += male;
        female_total += female;
        per_profession.push(ProfessionFormCounts { english: entry.english.clone(), male, female });
    }
    let neutral_total = neutral_forms.map(|forms| {
        forms
            .iter()
            .map(|f| table.query(&[f.as_ref()], &[]).values().sum::<u64>())
            .sum()
    });

    let components: Vec<u64> = match neutral_total {
        Some(n) => vec![n, female_total, male_total],
        None => vec![female_total, male_total],
    };
    FormRatioReport {
        per_profession,
        male_total,
        female_total,
        neutral_total,
        ratio_string: scaled_ratio(&components),
    }
}

/// Scales components so the smallest nonzero one becomes 1, rounding the rest
/// to the nearest integer.
fn scaled_ratio(components: &[u64]) -> String {
    let min_nonzero = components.iter().copied().filter(|&c| c > 0).min();
    let scaled: Vec<String> = match min_nonzero {
        Some(unit) => components
            .iter()
            .map(|&c| format!("{}", (c as f64 / unit as f64).round() as u64))
            .collect(),
        None => components.iter().map(|&c| c.to_string()).collect(),
    };
    scaled.join(":")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_table(corpus: &str) -> FrequencyTable {
        frequency_table_from_str(corpus, Normalization::default())
    }

    #[test]
    fn counts_hand_example() {
        let table = default_table("der Arzt\ndie Ärztin und der Arzt\n");
        assert_eq!(table.count("Arzt"), 2);
        assert_eq!(table.count("Ärztin"), 1);
        assert_eq!(table.count("der"), 2);
        assert_eq!(table.count("die"), 1);
        assert_eq!(table.count("und"), 1);
        assert_eq!(table.n_lines, 2);
        assert_eq!(table.total_tokens, 7);
    }

    #[test]
    fn empty_stream_is_empty_table() {
        let table = default_table("");
        assert_eq!(table.n_lines, 0);
        assert_eq!(table.total_tokens, 0);
        assert_eq!(table.n_distinct_forms(), 0);
    }

    #[test]
    fn line_order_does_not_matter() {
        let a = default_table("der Arzt\ndie Ärztin und der Arzt\n");
        let b = default_table("die Ärztin und der Arzt\nder Arzt\n");
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.total_tokens, b.total_tokens);
    }

    #[test]
    fn query_absent_form_is_zero() {
        let table = default_table("der Arzt\ndie Ärztin und der Arzt\n");
        let q = query_frequency(&table, &["Arzt", "Doktorin"]);
        assert_eq!(q["Arzt"], 2);
        assert_eq!(q["Doktorin"], 0);
    }

    #[test]
    fn case_fold_consistency() {
        let norm = Normalization { nfc: true, case_fold: true };
        let table = frequency_table_from_str("der Arzt\ndie Ärztin und der Arzt\n", norm);
        let q = table.query(&["arzt"], &[]);
        assert_eq!(q["arzt"], 2);
        // queries are normalized identically, so the original casing works too
        let q2 = table.query(&["Arzt"], &[]);
        assert_eq!(q2["arzt"], 2);
    }

    #[test]
    fn clitic_prefix_stripping_at_query_time() {
        let table = default_table("הרופא כאן\nרופא שם\n");
        let plain = table.query(&["רופא"], &[]);
        assert_eq!(plain["רופא"], 1);
        let with_prefix = table.query(&["רופא"], &["ה".to_string()]);
        assert_eq!(with_prefix["רופא"], 2);
    }

    #[test]
    fn invalid_utf8_names_byte_offset() {
        let bytes: &[u8] = b"ok line\nbad \xff byte\n";
        let err = build_frequency_table(bytes, Normalization::default()).unwrap_err();
        match err {
            CorpusError::InvalidUtf8 { offset } => assert_eq!(offset, 12),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn chunked_merge_equals_single_pass() {
        let corpus = "a b c\nb c d\nc d e\na a a\n";
        let whole = default_table(corpus);
        let lines: Vec<&str> = corpus.lines().collect();
        let first = default_table(&(lines[..2].join("\n") + "\n"));
        let second = default_table(&(lines[2..].join("\n") + "\n"));
        let merged = first.merge(second).unwrap();
        assert_eq!(whole, merged);
    }

    #[test]
    fn merge_rejects_normalization_mismatch() {
        let a = FrequencyTable::new(Normalization { nfc: true, case_fold: false });
        let b = FrequencyTable::new(Normalization { nfc: true, case_fold: true });
        assert!(matches!(a.merge(b), Err(CorpusError::NormalizationMismatch(_, _))));
    }

    #[test]
    fn tsv_sorted_by_count_then_form() {
        let table = default_table("b a\na c\n");
        assert_eq!(table.to_tsv(), "a\t2\nb\t1\nc\t1\n");
    }

    #[test]
    fn ratio_matches_worked_example() {
        assert_eq!(scaled_ratio(&[1, 193, 1845]), "1:193:1845");
        assert_eq!(scaled_ratio(&[7, 1351, 13515]), "1:193:1931");
        assert_eq!(scaled_ratio(&[5, 5, 5]), "1:1:1");
        assert_eq!(scaled_ratio(&[0, 10]), "0:1");
    }

    #[test]
    fn form_ratio_without_neutral_forms() {
        let lex = ProfessionLexicon::from_tsv_str("doctor\tmale\tArzt\tÄrztin\n").unwrap();
        let table = default_table("Arzt Arzt Arzt Ärztin\n");
        let report = form_ratio::<&str>(&table, &lex, None);
        assert_eq!(report.male_total, 3);
        assert_eq!(report.female_total, 1);
        assert_eq!(report.neutral_total, None);
        assert_eq!(report.ratio_string, "1:3");
    }

    #[test]
    fn form_ratio_with_neutral_forms() {
        let lex = ProfessionLexicon::from_tsv_str("doctor\tmale\tArzt\tÄrztin\n").unwrap();
        let table = default_table("Arzt Arzt Arzt Ärztin Mediziner*in\n");
        let report = form_ratio(&table, &lex, Some(&["Mediziner"]));
        // '*' splits words, so "Mediziner*in" contributes "Mediziner" and "in"
        assert_eq!(report.neutral_total, Some(1));
        assert_eq!(report.ratio_string, "1:1:3");
    }
}
