//! Profession translation lexicon: English profession names mapped to pairs
//! of gendered target-language forms, with stereotype labels.
//!
//! Two interchangeable on-disk formats are supported. The TSV layout mirrors
//! the annotation-spreadsheet workflow:
//!
//! ```text
//! # comment lines start with '#'
//! #language: de
//! physician<TAB>male<TAB>Arzt<TAB>Ärztin<TAB>Mediziner<TAB>Medizinerin
//! ```
//!
//! i.e. `english, stereotype, male_1, female_1, ..., male_k, female_k` with
//! blank trailing cells allowed. The JSON layout is the serde form of
//! [`ProfessionLexicon`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::nfc;

/// Maximum number of translation pairs accepted per profession.
pub const MAX_PAIRS_PER_PROFESSION: usize = 5;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: profession {english:?} has {n} pairs; at most {MAX_PAIRS_PER_PROFESSION} translation pairs are kept per profession")]
    TooManyPairs { line: usize, english: String, n: usize },
    #[error("duplicate profession {english:?} (lines {first} and {second})")]
    DuplicateProfession { english: String, first: usize, second: usize },
    #[error("profession {english:?}: form {form:?} appears in more than one pair")]
    FormInMultiplePairs { english: String, form: String },
    #[error("profession {english:?}: empty {which} form in pair {pair}")]
    EmptyForm { english: String, which: &'static str, pair: usize },
    #[error("invalid JSON lexicon: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Grammatical gender of an evaluation instance or a translation form slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Neutral,
}

impl FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            "neutral" => Ok(Gender::Neutral),
            other => Err(format!("unknown gender {other:?} (expected male, female, or neutral)")),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Neutral => "neutral",
        })
    }
}

/// Labor-statistics stereotype attributed to an English profession.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stereotype {
    Male,
    Female,
    Neutral,
}

impl Stereotype {
    /// Whether an instance of the given gender is pro-stereotypical here.
    pub fn matches(&self, gender: Gender) -> bool {
        matches!(
            (self, gender),
            (Stereotype::Male, Gender::Male) | (Stereotype::Female, Gender::Female)
        )
    }
}

impl FromStr for Stereotype {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "male" => Ok(Stereotype::Male),
            "female" => Ok(Stereotype::Female),
            "neutral" => Ok(Stereotype::Neutral),
            other => Err(format!("unknown stereotype {other:?} (expected male, female, or neutral)")),
        }
    }
}

impl fmt::Display for Stereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stereotype::Male => "male",
            Stereotype::Female => "female",
            Stereotype::Neutral => "neutral",
        })
    }
}

/// One attested pair of masculine and feminine target-language forms sharing
/// a stem. Annotators may deliberately propose the same word for both
/// genders; writing the identical form in both slots is how such a shared
/// form is flagged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationPair {
    pub male_form: String,
    pub female_form: String,
}

impl TranslationPair {
    pub fn new(male_form: impl Into<String>, female_form: impl Into<String>) -> Self {
        TranslationPair { male_form: male_form.into(), female_form: female_form.into() }
    }

    /// True when one surface form serves as both the male and female translation.
    pub fn is_shared(&self) -> bool {
        self.male_form == self.female_form
    }

    pub fn form(&self, gender: Gender) -> Option<&str> {
        match gender {
            Gender::Male => Some(&self.male_form),
            Gender::Female => Some(&self.female_form),
            Gender::Neutral => None,
        }
    }
}

/// An English profession with its stereotype label and attested translations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfessionEntry {
    pub english: String,
    pub stereotype: Stereotype,
    pub pairs: Vec<TranslationPair>,
}

/// The full lexicon for one target language. Immutable after loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfessionLexicon {
    pub language: String,
    pub entries: Vec<ProfessionEntry>,
}

/// On-disk lexicon format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconFormat {
    Tsv,
    Json,
}

/// Counts reported by [`lexicon_summary`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexiconSummary {
    pub n_professions: usize,
    pub n_pairs: usize,
    pub n_by_stereotype: BTreeMap<Stereotype, usize>,
}

/// Loads a lexicon from a UTF-8 stream in the given format, NFC-normalizing
/// all text and enforcing all lexicon invariants.
pub fn load_lexicon<R: Read>(mut source: R, format: LexiconFormat) -> Result<ProfessionLexicon, LexiconError> {
    let mut buf = String::new();
    source.read_to_string(&mut buf)?;
    match format {
        LexiconFormat::Tsv => ProfessionLexicon::from_tsv_str(&buf),
        LexiconFormat::Json => ProfessionLexicon::from_json_str(&buf),
    }
}

/// Summary counts over a lexicon. `n_pairs` is the sum of pair counts over
/// all entries; one of the released lists reconstructs to 67 pairs for German.
pub fn lexicon_summary(lex: &ProfessionLexicon) -> LexiconSummary {
    let mut n_by_stereotype = BTreeMap::new();
    for s in [Stereotype::Male, Stereotype::Female, Stereotype::Neutral] {
        n_by_stereotype.insert(s, 0);
    }
    let mut n_pairs = 0;
    for entry in &lex.entries {
        n_pairs += entry.pairs.len();
        *n_by_stereotype.entry(entry.stereotype).or_insert(0) += 1;
    }
    LexiconSummary { n_professions: lex.entries.len(), n_pairs, n_by_stereotype }
}

impl ProfessionLexicon {
    pub fn from_tsv_str(input: &str) -> Result<Self, LexiconError> {
        let mut language = String::from("und");
        let mut entries: Vec<ProfessionEntry> = Vec::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();

        for (idx, raw_line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(lang) = rest.trim().strip_prefix("language:") {
                    language = lang.trim().to_string();
                }
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() < 4 {
                return Err(LexiconError::Parse {
                    line: line_no,
                    msg: format!(
                        "expected at least 4 tab-separated cells (english, stereotype, male_form, female_form), got {}",
                        cells.len()
                    ),
                });
            }
            let english = nfc(cells[0].trim());
            if english.is_empty() {
                return Err(LexiconError::Parse { line: line_no, msg: "empty profession name".into() });
            }
            let stereotype = Stereotype::from_str(cells[1].trim())
                .map_err(|msg| LexiconError::Parse { line: line_no, msg })?;

            let mut pairs = Vec::new();
            let form_cells = &cells[2..];
            for (pair_idx, chunk) in form_cells.chunks(2).enumerate() {
                let male = nfc(chunk.first().map_or("", |c| c.trim()));
                let female = nfc(chunk.get(1).map_or("", |c| c.trim()));
                match (male.is_empty(), female.is_empty()) {
                    (true, true) => {
                        // blank trailing pair; anything after it must be blank too
                        continue;
                    }
                    (true, false) => {
                        return Err(LexiconError::EmptyForm {
                            english,
                            which: "male",
                            pair: pair_idx + 1,
                        })
                    }
                    (false, true) => {
                        return Err(LexiconError::EmptyForm {
                            english,
                            which: "female",
                            pair: pair_idx + 1,
                        })
                    }
                    (false, false) => {
                        if pairs.len() != pair_idx {
                            return Err(LexiconError::Parse {
                                line: line_no,
                                msg: format!("blank pair {} precedes a filled pair", pairs.len() + 1),
                            });
                        }
                        pairs.push(TranslationPair::new(male, female));
                    }
                }
            }
            if pairs.is_empty() {
                return Err(LexiconError::Parse { line: line_no, msg: "profession has no translation pairs".into() });
            }
            if pairs.len() > MAX_PAIRS_PER_PROFESSION {
                return Err(LexiconError::TooManyPairs { line: line_no, english, n: pairs.len() });
            }
            if let Some(&first) = seen.get(&english) {
                return Err(LexiconError::DuplicateProfession { english, first, second: line_no });
            }
            seen.insert(english.clone(), line_no);
            entries.push(ProfessionEntry { english, stereotype, pairs });
        }

        let lexicon = ProfessionLexicon { language, entries };
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn from_json_str(input: &str) -> Result<Self, LexiconError> {
        let mut lexicon: ProfessionLexicon = serde_json::from_str(input)?;
        lexicon.language = nfc(&lexicon.language);
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, entry) in lexicon.entries.iter_mut().enumerate() {
            entry.english = nfc(&entry.english);
            for (pair_idx, pair) in entry.pairs.iter_mut().enumerate() {
                pair.male_form = nfc(&pair.male_form);
                pair.female_form = nfc(&pair.female_form);
                if pair.male_form.is_empty() {
                    return Err(LexiconError::EmptyForm {
                        english: entry.english.clone(),
                        which: "male",
                        pair: pair_idx + 1,
                    });
                }
                if pair.female_form.is_empty() {
                    return Err(LexiconError::EmptyForm {
                        english: entry.english.clone(),
                        which: "female",
                        pair: pair_idx + 1,
                    });
                }
            }
            if entry.pairs.is_empty() {
                return Err(LexiconError::Parse { line: idx + 1, msg: format!("profession {:?} has no translation pairs", entry.english) });
            }
            if entry.pairs.len() > MAX_PAIRS_PER_PROFESSION {
                return Err(LexiconError::TooManyPairs { line: idx + 1, english: entry.english.clone(), n: entry.pairs.len() });
            }
            if let Some(&first) = seen.get(&entry.english) {
                return Err(LexiconError::DuplicateProfession { english: entry.english.clone(), first, second: idx + 1 });
            }
            seen.insert(entry.english.clone(), idx + 1);
        }
        lexicon.validate()?;
        Ok(lexicon)
    }

    /// Checks the cross-pair invariants that hold regardless of input format.
    fn validate(&self) -> Result<(), LexiconError> {
        for entry in &self.entries {
            let mut seen_forms: BTreeMap<&str, usize> = BTreeMap::new();
            for (pair_idx, pair) in entry.pairs.iter().enumerate() {
                for form in [&pair.male_form, &pair.female_form] {
                    if let Some(&other) = seen_forms.get(form.as_str()) {
                        if other != pair_idx {
                            return Err(LexiconError::FormInMultiplePairs {
                                english: entry.english.clone(),
                                form: form.clone(),
                            });
                        }
                    }
                    seen_forms.insert(form, pair_idx);
                }
            }
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("#language: {}\n", self.language));
        for entry in &self.entries {
            out.push_str(&entry.english);
            out.push('\t');
            out.push_str(&entry.stereotype.to_string());
            for pair in &entry.pairs {
                out.push('\t');
                out.push_str(&pair.male_form);
                out.push('\t');
                out.push_str(&pair.female_form);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String, LexiconError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn entry(&self, english: &str) -> Option<&ProfessionEntry> {
        self.entries.iter().find(|e| e.english == english)
    }

    /// All target forms in lexicon order: entries, then pairs, male slot first.
    pub fn all_forms(&self) -> Vec<&str> {
        let mut forms = Vec::new();
        for entry in &self.entries {
            for pair in &entry.pairs {
                forms.push(pair.male_form.as_str());
                forms.push(pair.female_form.as_str());
            }
        }
        forms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_row() {
        let lex = ProfessionLexicon::from_tsv_str("physician\tmale\tArzt\tÄrztin\n").unwrap();
        assert_eq!(lex.entries.len(), 1);
        let entry = &lex.entries[0];
        assert_eq!(entry.english, "physician");
        assert_eq!(entry.stereotype, Stereotype::Male);
        assert_eq!(entry.pairs, vec![TranslationPair::new("Arzt", "Ärztin")]);
    }

    #[test]
    fn empty_stream_is_empty_lexicon() {
        let lex = ProfessionLexicon::from_tsv_str("").unwrap();
        assert!(lex.entries.is_empty());
        let s = lexicon_summary(&lex);
        assert_eq!(s.n_professions, 0);
        assert_eq!(s.n_pairs, 0);
        assert!(s.n_by_stereotype.values().all(|&c| c == 0));
    }

    #[test]
    fn six_pairs_rejected() {
        let row = "doctor\tmale\ta\tb\tc\td\te\tf\tg\th\ti\tj\tk\tl\n";
        let err = ProfessionLexicon::from_tsv_str(row).unwrap_err();
        assert!(matches!(err, LexiconError::TooManyPairs { n: 6, .. }), "{err}");
    }

    #[test]
    fn five_pairs_accepted() {
        let row = "doctor\tmale\ta\tb\tc\td\te\tf\tg\th\ti\tj\n";
        let lex = ProfessionLexicon::from_tsv_str(row).unwrap();
        assert_eq!(lex.entries[0].pairs.len(), 5);
    }

    #[test]
    fn duplicate_profession_rejected() {
        let input = "doctor\tmale\tArzt\tÄrztin\ndoctor\tmale\tMediziner\tMedizinerin\n";
        let err = ProfessionLexicon::from_tsv_str(input).unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateProfession { .. }), "{err}");
    }

    #[test]
    fn shared_form_pair_is_valid_and_flagged() {
        let lex = ProfessionLexicon::from_tsv_str("judge\tmale\tשופט\tשופט\n").unwrap();
        assert!(lex.entries[0].pairs[0].is_shared());
    }

    #[test]
    fn form_in_two_pairs_rejected() {
        let input = "doctor\tmale\tArzt\tÄrztin\tArzt\tDoktorin\n";
        let err = ProfessionLexicon::from_tsv_str(input).unwrap_err();
        assert!(matches!(err, LexiconError::FormInMultiplePairs { .. }), "{err}");
    }

    #[test]
    fn half_filled_pair_rejected() {
        let input = "doctor\tmale\tArzt\t\n";
        let err = ProfessionLexicon::from_tsv_str(input).unwrap_err();
        assert!(matches!(err, LexiconError::EmptyForm { which: "female", .. }), "{err}");
    }

    #[test]
    fn trailing_blank_cells_allowed() {
        let input = "doctor\tmale\tArzt\tÄrztin\t\t\n";
        let lex = ProfessionLexicon::from_tsv_str(input).unwrap();
        assert_eq!(lex.entries[0].pairs.len(), 1);
    }

    #[test]
    fn comments_and_language_directive() {
        let input = "# a comment\n#language: de\nphysician\tmale\tArzt\tÄrztin\n";
        let lex = ProfessionLexicon::from_tsv_str(input).unwrap();
        assert_eq!(lex.language, "de");
    }

    #[test]
    fn forms_are_nfc_normalized() {
        // decomposed Ä (A + combining diaeresis) in the input
        let input = "physician\tmale\tArzt\tA\u{0308}rztin\n";
        let lex = ProfessionLexicon::from_tsv_str(input).unwrap();
        assert_eq!(lex.entries[0].pairs[0].female_form, "Ärztin");
    }

    #[test]
    fn summary_counts_pairs() {
        let input = "a\tmale\tm1\tf1\tm2\tf2\nb\tfemale\tm3\tf3\tm4\tf4\tm5\tf5\n";
        let lex = ProfessionLexicon::from_tsv_str(input).unwrap();
        let s = lexicon_summary(&lex);
        assert_eq!(s.n_professions, 2);
        assert_eq!(s.n_pairs, 5);
        assert_eq!(s.n_by_stereotype[&Stereotype::Male], 1);
        assert_eq!(s.n_by_stereotype[&Stereotype::Female], 1);
        assert_eq!(s.n_by_stereotype[&Stereotype::Neutral], 0);
    }

    #[test]
    fn tsv_round_trip() {
        let input = "#language: de\nphysician\tmale\tArzt\tÄrztin\tMediziner\tMedizinerin\nnurse\tfemale\tPfleger\tPflegerin\n";
        let lex = ProfessionLexicon::from_tsv_str(input).unwrap();
        let reloaded = ProfessionLexicon::from_tsv_str(&lex.to_tsv()).unwrap();
        assert_eq!(lex, reloaded);
    }

    #[test]
    fn json_round_trip() {
        let lex = ProfessionLexicon {
            language: "de".into(),
            entries: vec![ProfessionEntry {
                english: "physician".into(),
                stereotype: Stereotype::Male,
                pairs: vec![TranslationPair::new("Arzt", "Ärztin")],
            }],
        };
        let json = lex.to_json().unwrap();
        let reloaded = ProfessionLexicon::from_json_str(&json).unwrap();
        assert_eq!(lex, reloaded);
    }

    #[test]
    fn neutral_stereotype_accepted() {
        let lex = ProfessionLexicon::from_tsv_str("clerk\tneutral\tx\ty\n").unwrap();
        assert_eq!(lex.entries[0].stereotype, Stereotype::Neutral);
    }
}
