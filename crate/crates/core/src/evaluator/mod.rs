//! Scoring translation output against gold gender: per-profession recall,
//! per-form precision and F1, and the dataset-level accuracy/ΔG/ΔS measures.
//!
//! Correctness is presence-based: an output sentence is correct for an
//! instance when any attested form of the instance's gender occurs in it as a
//! whole word. Per-form precision is the share of such correct hits among all
//! output sentences in which the form occurred.

mod bleu;

pub use bleu::{bleu, BleuScore};

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::{Gender, ProfessionEntry, ProfessionLexicon, Stereotype};
use crate::text::{nfc, split_words, Normalization};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("instances and outputs are not aligned: {instances} instances vs {outputs} outputs")]
    LengthMismatch { instances: usize, outputs: usize },
    #[error("profession {0:?} is not in the lexicon")]
    UnknownProfession(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One WinoMT-style evaluation instance: an English sentence with a
/// profession whose gender is disambiguated by a pronoun. The profession is
/// expected to occur in the sentence (`entity_index` is its token position),
/// but the loader does not reject rows that break this, since scoring only
/// uses the profession and gender columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalInstance {
    pub gender: Gender,
    pub entity_index: usize,
    pub sentence: String,
    pub profession: String,
}

/// Parses the WinoMT TSV layout `gender<TAB>entity_index<TAB>sentence<TAB>profession`.
pub fn load_winomt<R: Read>(mut source: R) -> Result<Vec<EvalInstance>, EvalError> {
    let mut buf = String::new();
    source.read_to_string(&mut buf)?;
    let mut instances = Vec::new();
    for (idx, raw) in buf.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 4 {
            return Err(EvalError::Parse {
                line: line_no,
                msg: format!("expected 4 tab-separated cells, got {}", cells.len()),
            });
        }
        let gender = Gender::from_str(cells[0].trim())
            .map_err(|msg| EvalError::Parse { line: line_no, msg })?;
        let entity_index: usize = cells[1].trim().parse().map_err(|_| EvalError::Parse {
            line: line_no,
            msg: format!("entity index {:?} is not a non-negative integer", cells[1]),
        })?;
        instances.push(EvalInstance {
            gender,
            entity_index,
            sentence: nfc(cells[2]),
            profession: nfc(cells[3].trim()),
        });
    }
    Ok(instances)
}

/// Counts per gender over a loaded instance set.
pub fn gender_counts(instances: &[EvalInstance]) -> BTreeMap<Gender, usize> {
    let mut counts = BTreeMap::new();
    for g in [Gender::Male, Gender::Female, Gender::Neutral] {
        counts.insert(g, 0);
    }
    for inst in instances {
        *counts.entry(inst.gender).or_insert(0) += 1;
    }
    counts
}

/// Matching configuration shared by the evaluator and frequency queries:
/// normalization flags plus an optional clitic-prefix list (a form also hits
/// when `prefix + form` occurs as a whole word).
#[derive(Debug, Clone, Default)]
pub struct MatchConfig {
    pub normalization: Normalization,
    pub strip_prefixes: Vec<String>,
}

/// Which attested forms of the profession occur as whole words in a target
/// sentence. Hit lists follow lexicon pair order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormHits {
    pub male_hits: Vec<String>,
    pub female_hits: Vec<String>,
}

pub fn match_forms(
    target_sentence: &str,
    lex: &ProfessionLexicon,
    profession: &str,
    cfg: &MatchConfig,
) -> Result<FormHits, EvalError> {
    let entry = lex
        .entry(profession)
        .ok_or_else(|| EvalError::UnknownProfession(profession.to_string()))?;
    Ok(match_entry(target_sentence, entry, cfg))
}

fn match_entry(target_sentence: &str, entry: &ProfessionEntry, cfg: &MatchConfig) -> FormHits {
    let normalized = cfg.normalization.apply(target_sentence);
    let words: HashSet<&str> = split_words(&normalized).into_iter().collect();
    let occurs = |form: &str| -> bool {
        let form = cfg.normalization.apply(form);
        if words.contains(form.as_str()) {
            return true;
        }
        cfg.strip_prefixes
            .iter()
            .any(|p| words.contains(cfg.normalization.apply(&format!("{p}{form}")).as_str()))
    };
    let mut hits = FormHits { male_hits: Vec::new(), female_hits: Vec::new() };
    for pair in &entry.pairs {
        if occurs(&pair.male_form) {
            hits.male_hits.push(pair.male_form.clone());
        }
        if occurs(&pair.female_form) {
            hits.female_hits.push(pair.female_form.clone());
        }
    }
    hits
}

/// Per-(profession, gender) instance tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GenderCell {
    pub correct: u64,
    pub source_total: u64,
}

/// Per attested form tallies. A form is keyed by (profession, gender, form),
/// so a shared male/female surface form keeps separate counts per gender slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FormCell {
    pub correct_form: u64,
    pub output_occurrences: u64,
}

/// All tallies produced by [`evaluate`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProfessionStats {
    pub by_gender: BTreeMap<(String, Gender), GenderCell>,
    pub by_form: BTreeMap<(String, Gender, String), FormCell>,
    /// Instances evaluated (including neutral ones).
    pub n_instances: u64,
    /// Neutral-pronoun instances, counted separately and excluded from ΔG/ΔS.
    pub n_neutral: u64,
    /// Instances whose profession is absent from the lexicon.
    pub n_skipped_unknown_profession: u64,
}

impl ProfessionStats {
    pub fn gender_cell(&self, profession: &str, gender: Gender) -> GenderCell {
        self.by_gender.get(&(profession.to_string(), gender)).copied().unwrap_or_default()
    }

    pub fn form_cell(&self, profession: &str, gender: Gender, form: &str) -> FormCell {
        self.by_form
            .get(&(profession.to_string(), gender, form.to_string()))
            .copied()
            .unwrap_or_default()
    }
}

/// Scores outputs against instances, positionally aligned.
///
/// For each instance the profession-gender source total grows by one; if any
/// correct-gender attested form hits, the instance is correct and the first
/// hitting form (in lexicon order) receives the per-form credit; every
/// hitting form of either gender counts one output occurrence. Instances
/// whose profession the lexicon does not cover are skipped and counted.
pub fn evaluate(
    instances: &[EvalInstance],
    outputs: &[String],
    lex: &ProfessionLexicon,
    cfg: &MatchConfig,
) -> Result<ProfessionStats, EvalError> {
    if instances.len() != outputs.len() {
        return Err(EvalError::LengthMismatch { instances: instances.len(), outputs: outputs.len() });
    }
    let mut stats = ProfessionStats::default();
    for (inst, output) in instances.iter().zip(outputs) {
        let Some(entry) = lex.entry(&inst.profession) else {
            stats.n_skipped_unknown_profession += 1;
            continue;
        };
        stats.n_instances += 1;
        if inst.gender == Gender::Neutral {
            stats.n_neutral += 1;
        }
        let cell = stats
            .by_gender
            .entry((inst.profession.clone(), inst.gender))
            .or_default();
        cell.source_total += 1;

        let hits = match_entry(output, entry, cfg);
        for form in &hits.male_hits {
            stats
                .by_form
                .entry((inst.profession.clone(), Gender::Male, form.clone()))
                .or_default()
                .output_occurrences += 1;
        }
        for form in &hits.female_hits {
            stats
                .by_form
                .entry((inst.profession.clone(), Gender::Female, form.clone()))
                .or_default()
                .output_occurrences += 1;
        }
        let correct_hits = match inst.gender {
            Gender::Male => &hits.male_hits,
            Gender::Female => &hits.female_hits,
            Gender::Neutral => continue,
        };
        if let Some(first) = correct_hits.first() {
            stats
                .by_gender
                .get_mut(&(inst.profession.clone(), inst.gender))
                .expect("cell created above")
                .correct += 1;
            stats
                .by_form
                .get_mut(&(inst.profession.clone(), inst.gender, first.clone()))
                .expect("hit recorded above")
                .correct_form += 1;
        }
    }
    Ok(stats)
}

/// Recall, precision, and their harmonic mean for one attested translation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Record {
    pub profession: String,
    pub gender: Gender,
    pub form: String,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub correct_form: u64,
    pub output_occurrences: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// One record per attested form, in lexicon order (entries, pairs, male slot
/// first). Recall comes from the form's (profession, gender) cell; precision
/// from the form's own counts; zero denominators yield 0.
pub fn f1_per_translation(stats: &ProfessionStats, lex: &ProfessionLexicon) -> Vec<F1Record> {
    let mut records = Vec::new();
    for entry in &lex.entries {
        for pair in &entry.pairs {
            for (gender, form) in [(Gender::Male, &pair.male_form), (Gender::Female, &pair.female_form)] {
                let gc = stats.gender_cell(&entry.english, gender);
                let fc = stats.form_cell(&entry.english, gender, form);
                let recall = ratio(gc.correct, gc.source_total);
                let precision = ratio(fc.correct_form, fc.output_occurrences);
                records.push(F1Record {
                    profession: entry.english.clone(),
                    gender,
                    form: form.clone(),
                    recall,
                    precision,
                    f1: harmonic(precision, recall),
                    correct_form: fc.correct_form,
                    output_occurrences: fc.output_occurrences,
                });
            }
        }
    }
    records
}

/// Whole-dataset bias measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateBias {
    /// Share of non-neutral instances translated to a correct-gender form.
    pub accuracy: f64,
    /// Micro-F1 over male instances minus micro-F1 over female instances.
    pub delta_g: f64,
    /// Micro-F1 over pro-stereotypical minus anti-stereotypical instances.
    pub delta_s: f64,
}

pub fn aggregate_bias(
    instances: &[EvalInstance],
    outputs: &[String],
    lex: &ProfessionLexicon,
    cfg: &MatchConfig,
) -> Result<AggregateBias, EvalError> {
    let stats = evaluate(instances, outputs, lex, cfg)?;
    Ok(aggregate_from_stats(&stats, lex))
}

/// Micro-pooled aggregate from existing tallies. An instance is
/// pro-stereotypical when its gender equals its profession's stereotype;
/// neutral instances and neutral-stereotype professions are excluded from
/// the stereotype split.
pub fn aggregate_from_stats(stats: &ProfessionStats, lex: &ProfessionLexicon) -> AggregateBias {
    let mut correct_all = 0;
    let mut total_all = 0;

    // (correct, total) recall pools and (correct_form, occurrences) precision pools
    let mut recall_pool: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut precision_pool: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for side in ["male", "female", "pro", "anti"] {
        recall_pool.insert(side, (0, 0));
        precision_pool.insert(side, (0, 0));
    }

    for ((profession, gender), cell) in &stats.by_gender {
        if *gender == Gender::Neutral {
            continue;
        }
        correct_all += cell.correct;
        total_all += cell.source_total;
        let side = if *gender == Gender::Male { "male" } else { "female" };
        let pool = recall_pool.get_mut(side).unwrap();
        pool.0 += cell.correct;
        pool.1 += cell.source_total;
        if let Some(entry) = lex.entry(profession) {
            if entry.stereotype != Stereotype::Neutral {
                let stereo_side = if entry.stereotype.matches(*gender) { "pro" } else { "anti" };
                let pool = recall_pool.get_mut(stereo_side).unwrap();
                pool.0 += cell.correct;
                pool.1 += cell.source_total;
            }
        }
    }
    for ((profession, gender, _form), cell) in &stats.by_form {
        if *gender == Gender::Neutral {
            continue;
        }
        let side = if *gender == Gender::Male { "male" } else { "female" };
        let pool = precision_pool.get_mut(side).unwrap();
        pool.0 += cell.correct_form;
        pool.1 += cell.output_occurrences;
        if let Some(entry) = lex.entry(profession) {
            if entry.stereotype != Stereotype::Neutral {
                let stereo_side = if entry.stereotype.matches(*gender) { "pro" } else { "anti" };
                let pool = precision_pool.get_mut(stereo_side).unwrap();
                pool.0 += cell.correct_form;
                pool.1 += cell.output_occurrences;
            }
        }
    }

    let micro_f1 = |side: &str| -> f64 {
        let (rc, rt) = recall_pool[side];
        let (pc, pt) = precision_pool[side];
        harmonic(ratio(pc, pt), ratio(rc, rt))
    };

    AggregateBias {
        accuracy: ratio(correct_all, total_all),
        delta_g: micro_f1("male") - micro_f1("female"),
        delta_s: micro_f1("pro") - micro_f1("anti"),
    }
}

/// Per-profession row of the JSON/CSV evaluation report.
#[derive(Debug, Clone, Serialize)]
pub struct ProfessionReportRow {
    pub profession: String,
    pub stereotype: Stereotype,
    pub gender: Gender,
    pub correct: u64,
    pub source_total: u64,
    pub recall: f64,
}

/// Full evaluation report: per-profession, per-form, and aggregate sections.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub per_profession: Vec<ProfessionReportRow>,
    pub per_form: Vec<F1Record>,
    pub aggregate: AggregateBias,
    pub n_instances: u64,
    pub n_neutral: u64,
    pub n_skipped_unknown_profession: u64,
}

pub fn eval_report(stats: &ProfessionStats, lex: &ProfessionLexicon) -> EvalReport {
    let mut per_profession = Vec::new();
    for entry in &lex.entries {
        for gender in [Gender::Male, Gender::Female, Gender::Neutral] {
            let cell = stats.gender_cell(&entry.english, gender);
            if cell.source_total == 0 {
                continue;
            }
            per_profession.push(ProfessionReportRow {
                profession: entry.english.clone(),
                stereotype: entry.stereotype,
                gender,
                correct: cell.correct,
                source_total: cell.source_total,
                recall: ratio(cell.correct, cell.source_total),
            });
        }
    }
    EvalReport {
        per_profession,
        per_form: f1_per_translation(stats, lex),
        aggregate: aggregate_from_stats(stats, lex),
        n_instances: stats.n_instances,
        n_neutral: stats.n_neutral,
        n_skipped_unknown_profession: stats.n_skipped_unknown_profession,
    }
}

/// CSV flattening of the per-profession section.
pub fn profession_rows_to_csv(rows: &[ProfessionReportRow]) -> String {
    let mut out = String::from("profession,stereotype,gender,correct,source_total,recall\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.profession),
            r.stereotype,
            r.gender,
            r.correct,
            r.source_total,
            r.recall
        );
    }
    out
}

/// CSV flattening of the per-form section.
pub fn f1_records_to_csv(records: &[F1Record]) -> String {
    let mut out = String::from("profession,gender,form,recall,precision,f1,correct_form,output_occurrences\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.profession),
            r.gender,
            csv_field(&r.form),
            r.recall,
            r.precision,
            r.f1,
            r.correct_form,
            r.output_occurrences
        );
    }
    out
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
