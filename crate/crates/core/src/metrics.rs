//! Per-pair bias metrics joining translation F1, token counts, and corpus
//! frequency: ΔG, ΔS, ΔT_G, ΔT_S, and the per-form records behind the
//! correlation and conditional-independence analyses.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::FrequencyTable;
use crate::evaluator::{csv_field, F1Record};
use crate::lexicon::{Gender, ProfessionLexicon, Stereotype};
use crate::tokenizer::{count_tokens, UnigramVocab};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("profession {0:?} appears in the F1 records but not in the lexicon")]
    UnknownProfession(String),
}

/// The joint record for one translation pair.
///
/// `delta_g = f1_male - f1_female` and `delta_t_g = tokens_male -
/// tokens_female`; the stereotype-relative deltas equal the gender deltas for
/// male-stereotyped professions and their negation for female-stereotyped
/// ones, and are undefined (`None`) for neutral-stereotype entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairMetrics {
    pub profession: String,
    pub stereotype: Stereotype,
    pub male_form: String,
    pub female_form: String,
    pub f1_male: f64,
    pub f1_female: f64,
    pub delta_g: f64,
    pub delta_s: Option<f64>,
    pub tokens_male: usize,
    pub tokens_female: usize,
    pub delta_t_g: i64,
    pub delta_t_s: Option<i64>,
    pub freq_male: u64,
    pub freq_female: u64,
    /// True when either form never occurred in the evaluated outputs (or had
    /// no F1 record at all); correlation analyses may exclude such pairs.
    pub unobserved: bool,
}

/// One record per (profession, pair), in lexicon order.
///
/// Forms without an F1 record contribute f1 = 0 and flag the pair as
/// unobserved. Token counts come from the vocabulary, frequencies from the
/// table (with optional clitic prefixes, as at evaluation time).
pub fn pair_metrics(
    f1s: &[F1Record],
    vocab: &UnigramVocab,
    freq: &FrequencyTable,
    lex: &ProfessionLexicon,
    strip_prefixes: &[String],
) -> Result<Vec<PairMetrics>, MetricsError> {
    for record in f1s {
        if lex.entry(&record.profession).is_none() {
            return Err(MetricsError::UnknownProfession(record.profession.clone()));
        }
    }
    let mut by_key: HashMap<(&str, Gender, &str), &F1Record> = HashMap::with_capacity(f1s.len());
    for record in f1s {
        by_key.insert((record.profession.as_str(), record.gender, record.form.as_str()), record);
    }

    let mut out = Vec::new();
    for entry in &lex.entries {
        for pair in &entry.pairs {
            let male = by_key.get(&(entry.english.as_str(), Gender::Male, pair.male_form.as_str()));
            let female = by_key.get(&(entry.english.as_str(), Gender::Female, pair.female_form.as_str()));
            let f1_male = male.map_or(0.0, |r| r.f1);
            let f1_female = female.map_or(0.0, |r| r.f1);
            let unobserved = male.is_none_or(|r| r.output_occurrences == 0)
                || female.is_none_or(|r| r.output_occurrences == 0);

            let tokens_male = count_tokens(vocab, &pair.male_form);
            let tokens_female = count_tokens(vocab, &pair.female_form);
            let freq_male = freq.query(&[pair.male_form.as_str()], strip_prefixes).values().sum();
            let freq_female = freq.query(&[pair.female_form.as_str()], strip_prefixes).values().sum();

            let delta_g = f1_male - f1_female;
            let delta_t_g = tokens_male as i64 - tokens_female as i64;
            let (delta_s, delta_t_s) = match entry.stereotype {
                Stereotype::Male => (Some(delta_g), Some(delta_t_g)),
                Stereotype::Female => (Some(-delta_g), Some(-delta_t_g)),
                Stereotype::Neutral => (None, None),
            };

            out.push(PairMetrics {
                profession: entry.english.clone(),
                stereotype: entry.stereotype,
                male_form: pair.male_form.clone(),
                female_form: pair.female_form.clone(),
                f1_male,
                f1_female,
                delta_g,
                delta_s,
                tokens_male,
                tokens_female,
                delta_t_g,
                delta_t_s,
                freq_male,
                freq_female,
                unobserved,
            });
        }
    }
    Ok(out)
}

/// Field selector for [`scatter_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairField {
    F1Male,
    F1Female,
    DeltaG,
    DeltaS,
    TokensMale,
    TokensFemale,
    DeltaTG,
    DeltaTS,
    FreqMale,
    FreqFemale,
}

impl PairField {
    pub fn get(&self, m: &PairMetrics) -> Option<f64> {
        match self {
            PairField::F1Male => Some(m.f1_male),
            PairField::F1Female => Some(m.f1_female),
            PairField::DeltaG => Some(m.delta_g),
            PairField::DeltaS => m.delta_s,
            PairField::TokensMale => Some(m.tokens_male as f64),
            PairField::TokensFemale => Some(m.tokens_female as f64),
            PairField::DeltaTG => Some(m.delta_t_g as f64),
            PairField::DeltaTS => m.delta_t_s.map(|v| v as f64),
            PairField::FreqMale => Some(m.freq_male as f64),
            PairField::FreqFemale => Some(m.freq_female as f64),
        }
    }
}

/// Figure-ready (x, y) points in input order. Records where either selected
/// field is undefined are skipped; the skip count is returned alongside.
pub fn scatter_series(metrics: &[PairMetrics], x: PairField, y: PairField) -> (Vec<(f64, f64)>, usize) {
    let mut points = Vec::with_capacity(metrics.len());
    let mut skipped = 0;
    for m in metrics {
        match (x.get(m), y.get(m)) {
            (Some(a), Some(b)) => points.push((a, b)),
            _ => skipped += 1,
        }
    }
    (points, skipped)
}

/// Median of y per distinct x value, sorted by x — the per-ΔT-column median
/// summaries shown as orange lines in the scatter figures.
pub fn median_by_x(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut grouped: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    for (x, y) in sorted {
        match grouped.last_mut() {
            Some((gx, ys)) if *gx == x => ys.push(y),
            _ => grouped.push((x, vec![y])),
        }
    }
    grouped
        .into_iter()
        .map(|(x, ys)| {
            let n = ys.len();
            let median = if n % 2 == 1 { ys[n / 2] } else { (ys[n / 2 - 1] + ys[n / 2]) / 2.0 };
            (x, median)
        })
        .collect()
}

/// Per-form record feeding the conditional-independence test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormRecord {
    pub profession: String,
    pub gender: Gender,
    pub form: String,
    pub f1: f64,
    pub n_tokens: usize,
    pub frequency: u64,
}

/// Flattens pair metrics into one record per form (male and female).
pub fn form_records(metrics: &[PairMetrics]) -> Vec<FormRecord> {
    let mut out = Vec::with_capacity(metrics.len() * 2);
    for m in metrics {
        out.push(FormRecord {
            profession: m.profession.clone(),
            gender: Gender::Male,
            form: m.male_form.clone(),
            f1: m.f1_male,
            n_tokens: m.tokens_male,
            frequency: m.freq_male,
        });
        out.push(FormRecord {
            profession: m.profession.clone(),
            gender: Gender::Female,
            form: m.female_form.clone(),
            f1: m.f1_female,
            n_tokens: m.tokens_female,
            frequency: m.freq_female,
        });
    }
    out
}

/// CSV export: one row per pair, columns in type-field order.
pub fn pair_metrics_to_csv(metrics: &[PairMetrics]) -> String {
    let mut out = String::from(
        "profession,stereotype,male_form,female_form,f1_male,f1_female,delta_g,delta_s,\
         tokens_male,tokens_female,delta_t_g,delta_t_s,freq_male,freq_female,unobserved\n",
    );
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&m.profession),
            m.stereotype,
            csv_field(&m.male_form),
            csv_field(&m.female_form),
            m.f1_male,
            m.f1_female,
            m.delta_g,
            m.delta_s.map_or(String::new(), |v| v.to_string()),
            m.tokens_male,
            m.tokens_female,
            m.delta_t_g,
            m.delta_t_s.map_or(String::new(), |v| v.to_string()),
            m.freq_male,
            m.freq_female,
            m.unobserved
        );
    }
    out
}
