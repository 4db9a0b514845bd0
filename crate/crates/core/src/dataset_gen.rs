//! Gender-balanced bilingual template dataset for fine-tuning pipelines:
//! "He/She is the [profession]" on the source side, user-supplied
//! target-language patterns filled with the attested forms.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::{Gender, ProfessionLexicon};

const PLACEHOLDER: &str = "{}";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{which} pattern must contain exactly one {{}} placeholder, found {found}")]
    BadPattern { which: &'static str, found: usize },
}

/// Target-side sentence patterns, one `{}` placeholder each. The patterns are
/// per language and user-supplied (the source side is fixed English).
#[derive(Debug, Clone)]
pub struct TargetTemplates {
    pub male_pattern: String,
    pub female_pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateRow {
    pub source: String,
    pub target: String,
    pub gender: Gender,
}

/// Emits one male and one female row per (profession, pair), in lexicon
/// order with the male row first, so male and female counts are equal by
/// construction.
pub fn generate_balanced(
    lex: &ProfessionLexicon,
    templates: &TargetTemplates,
) -> Result<Vec<TemplateRow>, DatasetError> {
    check_pattern("male", &templates.male_pattern)?;
    check_pattern("female", &templates.female_pattern)?;
    let mut rows = Vec::new();
    for entry in &lex.entries {
        for pair in &entry.pairs {
            rows.push(TemplateRow {
                source: format!("He is the {}", entry.english),
                target: templates.male_pattern.replacen(PLACEHOLDER, &pair.male_form, 1),
                gender: Gender::Male,
            });
            rows.push(TemplateRow {
                source: format!("She is the {}", entry.english),
                target: templates.female_pattern.replacen(PLACEHOLDER, &pair.female_form, 1),
                gender: Gender::Female,
            });
        }
    }
    Ok(rows)
}

fn check_pattern(which: &'static str, pattern: &str) -> Result<(), DatasetError> {
    let found = pattern.matches(PLACEHOLDER).count();
    if found != 1 {
        return Err(DatasetError::BadPattern { which, found });
    }
    Ok(())
}

/// TSV export: `source<TAB>target<TAB>gender`.
pub fn rows_to_tsv(rows: &[TemplateRow]) -> String {
    let mut out = String::new();
    for row in rows {
        let _ = writeln!(out, "{}\t{}\t{}", row.source, row.target, row.gender);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn templates() -> TargetTemplates {
        TargetTemplates { male_pattern: "Er ist der {}".into(), female_pattern: "Sie ist die {}".into() }
    }

    #[test]
    fn one_pair_two_balanced_rows() {
        let lex = ProfessionLexicon::from_tsv_str("physician\tmale\tArzt\tÄrztin\n").unwrap();
        let rows = generate_balanced(&lex, &templates()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].source, "He is the physician");
        assert_eq!(rows[0].target, "Er ist der Arzt");
        assert_eq!(rows[0].gender, Gender::Male);
        assert_eq!(rows[1].source, "She is the physician");
        assert_eq!(rows[1].target, "Sie ist die Ärztin");
        assert_eq!(rows[1].gender, Gender::Female);
    }

    #[test]
    fn row_count_is_twice_the_pair_count() {
        let lex = ProfessionLexicon::from_tsv_str(
            "a\tmale\tm1\tf1\tm2\tf2\nb\tfemale\tm3\tf3\n",
        )
        .unwrap();
        let rows = generate_balanced(&lex, &templates()).unwrap();
        assert_eq!(rows.len(), 6);
        let male = rows.iter().filter(|r| r.gender == Gender::Male).count();
        let female = rows.iter().filter(|r| r.gender == Gender::Female).count();
        assert_eq!(male, female);
    }

    #[test]
    fn every_form_appears_exactly_once() {
        let lex = ProfessionLexicon::from_tsv_str("a\tmale\tm1\tf1\tm2\tf2\n").unwrap();
        let rows = generate_balanced(&lex, &templates()).unwrap();
        for form in ["m1", "f1", "m2", "f2"] {
            let hits = rows.iter().filter(|r| r.target.ends_with(form)).count();
            assert_eq!(hits, 1, "form {form}");
        }
    }

    #[test]
    fn pattern_without_placeholder_is_error() {
        let lex = ProfessionLexicon::from_tsv_str("a\tmale\tm\tf\n").unwrap();
        let bad = TargetTemplates { male_pattern: "Er ist der".into(), female_pattern: "Sie ist die {}".into() };
        let err = generate_balanced(&lex, &bad).unwrap_err();
        assert!(matches!(err, DatasetError::BadPattern { which: "male", found: 0 }), "{err}");
    }

    #[test]
    fn tsv_export_layout() {
        let lex = ProfessionLexicon::from_tsv_str("a\tmale\tm\tf\n").unwrap();
        let rows = generate_balanced(&lex, &templates()).unwrap();
        let tsv = rows_to_tsv(&rows);
        assert_eq!(tsv, "He is the a\tEr ist der m\tmale\nShe is the a\tSie ist die f\tfemale\n");
    }
}
