use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use tokbias_core::corpus::{build_frequency_table, form_ratio, FrequencyTable};
use tokbias_core::dataset_gen::{generate_balanced, rows_to_tsv, TargetTemplates};
use tokbias_core::evaluator::{
    bleu, eval_report, evaluate, f1_per_translation, f1_records_to_csv, load_winomt,
    profession_rows_to_csv, BleuScore, EvalInstance, MatchConfig,
};
use tokbias_core::lexicon::{load_lexicon, LexiconFormat, ProfessionLexicon};
use tokbias_core::metrics::{
    form_records, median_by_x, pair_metrics, pair_metrics_to_csv, scatter_series, PairField,
    PairMetrics,
};
use tokbias_core::stats::{conditional_independence, pearson, CiRecord, CiResult, JtMode};
use tokbias_core::text::Normalization;
use tokbias_core::tokenizer::{
    protect_forms, token_histogram, train_unigram, FormClass, HistogramGrouping, HistogramRow,
    TokenHistogram, TrainParams, UnigramVocab,
};

use crate::report::{json_report, read_file, write_file, Meta};
use crate::{
    AnalyzeArgs, BleuArgs, CliError, EvalArgs, FreqArgs, GenDatasetArgs, MatchOpts, PipelineArgs,
    ProtectVocabArgs, TokensArgs, TrainTokenizerArgs,
};

fn load_lexicon_file(path: &Path) -> Result<ProfessionLexicon, CliError> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => LexiconFormat::Json,
        _ => LexiconFormat::Tsv,
    };
    let text = read_file(path)?;
    load_lexicon(text.as_bytes(), format)
        .with_context(|| format!("invalid lexicon {}", path.display()))
        .map_err(CliError::Input)
}

fn load_vocab_file(path: &Path) -> Result<UnigramVocab, CliError> {
    let text = read_file(path)?;
    UnigramVocab::from_tsv_str(&text)
        .with_context(|| format!("invalid vocabulary {}", path.display()))
        .map_err(CliError::Input)
}

fn load_corpus_file(path: &Path, normalization: Normalization) -> Result<FrequencyTable, CliError> {
    let file = File::open(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::Input)?;
    build_frequency_table(file, normalization)
        .with_context(|| format!("invalid corpus {}", path.display()))
        .map_err(CliError::Input)
}

fn load_lines(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(read_file(path)?.lines().map(str::to_string).collect())
}

fn match_config(opts: &MatchOpts) -> Result<MatchConfig, CliError> {
    let strip_prefixes = match &opts.strip_prefixes {
        Some(path) => load_lines(path)?.into_iter().filter(|l| !l.trim().is_empty()).collect(),
        None => Vec::new(),
    };
    Ok(MatchConfig {
        normalization: Normalization { nfc: true, case_fold: opts.case_fold },
        strip_prefixes,
    })
}

fn language(lang_flag: &Option<String>, lex: Option<&ProfessionLexicon>) -> Option<String> {
    lang_flag.clone().or_else(|| lex.map(|l| l.language.clone()))
}

#[derive(Serialize)]
struct HistogramSection {
    rows: Vec<HistogramRow>,
    mean_tokens: BTreeMap<String, Option<f64>>,
    total_forms: u64,
    skipped_neutral: usize,
}

fn histogram_section(hist: &TokenHistogram, classes: [FormClass; 2]) -> HistogramSection {
    let mut mean_tokens = BTreeMap::new();
    for class in classes {
        mean_tokens.insert(class.to_string(), hist.mean_tokens(class));
    }
    HistogramSection {
        rows: hist.rows(),
        mean_tokens,
        total_forms: hist.total_forms(),
        skipped_neutral: hist.skipped_neutral,
    }
}

pub(crate) fn tokens(args: &TokensArgs) -> Result<(), CliError> {
    let vocab = load_vocab_file(&args.vocab)?;
    let lex = load_lexicon_file(&args.lexicon)?;
    let meta = Meta::new(
        "tokens",
        language(&args.common.lang, Some(&lex)),
        args.common.seed,
        json!({ "vocab": args.vocab, "lexicon": args.lexicon }),
    );

    let by_gender = token_histogram(&vocab, &lex, HistogramGrouping::ByGender);
    let by_stereotype = token_histogram(&vocab, &lex, HistogramGrouping::ByStereotype);

    let out = &args.common.out_dir;
    write_file(out, "tokens_by_gender.csv", &(meta.comment_block() + &by_gender.to_csv()))?;
    write_file(out, "tokens_by_stereotype.csv", &(meta.comment_block() + &by_stereotype.to_csv()))?;

    #[derive(Serialize)]
    struct TokensBody {
        by_gender: HistogramSection,
        by_stereotype: HistogramSection,
    }
    let body = TokensBody {
        by_gender: histogram_section(&by_gender, [FormClass::Male, FormClass::Female]),
        by_stereotype: histogram_section(&by_stereotype, [FormClass::Pro, FormClass::Anti]),
    };
    write_file(out, "tokens.json", &json_report(&meta, &body)?)?;
    Ok(())
}

/// Loads instances/outputs, evaluates, and returns everything eval and
/// analyze share.
fn run_evaluation(
    lexicon_path: &Path,
    winomt_path: &Path,
    outputs_path: &Path,
    matching: &MatchOpts,
) -> Result<(ProfessionLexicon, Vec<EvalInstance>, Vec<String>, MatchConfig), CliError> {
    let lex = load_lexicon_file(lexicon_path)?;
    let text = read_file(winomt_path)?;
    let instances = load_winomt(text.as_bytes())
        .with_context(|| format!("invalid WinoMT file {}", winomt_path.display()))
        .map_err(CliError::Input)?;
    let outputs = load_lines(outputs_path)?;
    let cfg = match_config(matching)?;
    Ok((lex, instances, outputs, cfg))
}

fn compute_pair_metrics(
    lex: &ProfessionLexicon,
    instances: &[EvalInstance],
    outputs: &[String],
    cfg: &MatchConfig,
    vocab: &UnigramVocab,
    table: &FrequencyTable,
) -> Result<Vec<PairMetrics>, CliError> {
    let stats = evaluate(instances, outputs, lex, cfg)?;
    let f1s = f1_per_translation(&stats, lex);
    pair_metrics(&f1s, vocab, table, lex, &cfg.strip_prefixes).map_err(CliError::input)
}

pub(crate) fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let (lex, instances, outputs, cfg) =
        run_evaluation(&args.lexicon, &args.winomt, &args.outputs, &args.matching)?;
    let meta = Meta::new(
        "eval",
        language(&args.common.lang, Some(&lex)),
        args.common.seed,
        json!({
            "lexicon": args.lexicon,
            "winomt": args.winomt,
            "outputs": args.outputs,
            "vocab": args.vocab,
            "corpus": args.corpus,
            "case_fold": args.matching.case_fold,
            "strip_prefixes": args.matching.strip_prefixes,
        }),
    );

    let stats = evaluate(&instances, &outputs, &lex, &cfg)?;
    let report = eval_report(&stats, &lex);
    let out = &args.common.out_dir;
    write_file(out, "eval_report.json", &json_report(&meta, &report)?)?;
    write_file(out, "per_form_f1.csv", &(meta.comment_block() + &f1_records_to_csv(&report.per_form)))?;
    write_file(
        out,
        "per_profession.csv",
        &(meta.comment_block() + &profession_rows_to_csv(&report.per_profession)),
    )?;

    match (&args.vocab, &args.corpus) {
        (Some(vocab_path), Some(corpus_path)) => {
            let vocab = load_vocab_file(vocab_path)?;
            let table = load_corpus_file(corpus_path, cfg.normalization)?;
            let metrics = pair_metrics(&report.per_form, &vocab, &table, &lex, &cfg.strip_prefixes)
                .map_err(CliError::input)?;
            write_file(out, "pair_metrics.csv", &(meta.comment_block() + &pair_metrics_to_csv(&metrics)))?;
            #[derive(Serialize)]
            struct PairBody<'a> {
                pairs: &'a [PairMetrics],
            }
            write_file(out, "pair_metrics.json", &json_report(&meta, &PairBody { pairs: &metrics })?)?;
        }
        (None, None) => {}
        _ => {
            return Err(CliError::Input(anyhow!(
                "pair metrics need both --vocab and --corpus (got only one)"
            )))
        }
    }
    println!(
        "accuracy {:.4}  delta_g {:+.4}  delta_s {:+.4}  ({} instances, {} neutral, {} skipped)",
        report.aggregate.accuracy,
        report.aggregate.delta_g,
        report.aggregate.delta_s,
        report.n_instances,
        report.n_neutral,
        report.n_skipped_unknown_profession
    );
    Ok(())
}

#[derive(Serialize)]
struct CorrTest {
    x: String,
    y: String,
    n: usize,
    r: Option<f64>,
    p_two_sided: Option<f64>,
    skipped: usize,
    error: Option<String>,
}

fn corr_test(name_x: &str, name_y: &str, points: &[(f64, f64)], skipped: usize) -> CorrTest {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    match pearson(&xs, &ys) {
        Ok(res) => CorrTest {
            x: name_x.into(),
            y: name_y.into(),
            n: res.n,
            r: Some(res.r),
            p_two_sided: Some(res.p_two_sided),
            skipped,
            error: None,
        },
        Err(err) => CorrTest {
            x: name_x.into(),
            y: name_y.into(),
            n: points.len(),
            r: None,
            p_two_sided: None,
            skipped,
            error: Some(err.to_string()),
        },
    }
}

pub(crate) fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let (lex, instances, outputs, cfg) =
        run_evaluation(&args.lexicon, &args.winomt, &args.outputs, &args.matching)?;
    let vocab = load_vocab_file(&args.vocab)?;
    let table = load_corpus_file(&args.corpus, cfg.normalization)?;
    let meta = Meta::new(
        "analyze",
        language(&args.common.lang, Some(&lex)),
        args.common.seed,
        json!({
            "lexicon": args.lexicon,
            "winomt": args.winomt,
            "outputs": args.outputs,
            "vocab": args.vocab,
            "corpus": args.corpus,
            "case_fold": args.matching.case_fold,
            "strip_prefixes": args.matching.strip_prefixes,
            "strata": args.stats.strata,
            "stat_mode": match args.stats.stat_mode {
                crate::StatMode::Auto => "auto",
                crate::StatMode::Exact => "exact",
                crate::StatMode::Normal => "normal",
            },
            "ci_per_gender": args.stats.ci_per_gender,
        }),
    );

    let metrics = compute_pair_metrics(&lex, &instances, &outputs, &cfg, &vocab, &table)?;
    let forms = form_records(&metrics);

    let (dt_g, skipped_g) = scatter_series(&metrics, PairField::DeltaTG, PairField::DeltaG);
    let (dt_s, skipped_s) = scatter_series(&metrics, PairField::DeltaTS, PairField::DeltaS);
    let freq_f1: Vec<(f64, f64)> = forms.iter().map(|f| (f.frequency as f64, f.f1)).collect();
    let freq_tokens: Vec<(f64, f64)> = forms.iter().map(|f| (f.frequency as f64, f.n_tokens as f64)).collect();

    let pearson_tests = vec![
        corr_test("delta_t_g", "delta_g", &dt_g, skipped_g),
        corr_test("delta_t_s", "delta_s", &dt_s, skipped_s),
        corr_test("frequency", "f1", &freq_f1, 0),
        corr_test("frequency", "n_tokens", &freq_tokens, 0),
    ];

    let mode: JtMode = args.stats.stat_mode.into();
    let run_ci = |records: &[CiRecord]| -> (Option<CiResult>, Option<String>) {
        match conditional_independence(records, args.stats.strata, mode, args.common.seed) {
            Ok(result) => (Some(result), None),
            Err(err) => (None, Some(err.to_string())),
        }
    };
    let to_ci = |iter: &mut dyn Iterator<Item = &tokbias_core::metrics::FormRecord>| -> Vec<CiRecord> {
        iter.map(|f| CiRecord { f1: f.f1, n_tokens: f.n_tokens, frequency: f.frequency }).collect()
    };
    let ci_records = to_ci(&mut forms.iter());
    let (ci, ci_error) = run_ci(&ci_records);
    let (ci_male, ci_female) = if args.stats.ci_per_gender {
        use tokbias_core::lexicon::Gender;
        let male = to_ci(&mut forms.iter().filter(|f| f.gender == Gender::Male));
        let female = to_ci(&mut forms.iter().filter(|f| f.gender == Gender::Female));
        (Some(run_ci(&male)), Some(run_ci(&female)))
    } else {
        (None, None)
    };

    #[derive(Serialize)]
    struct CiSection {
        result: Option<CiResult>,
        error: Option<String>,
    }
    #[derive(Serialize)]
    struct AnalysisBody {
        pearson: Vec<CorrTest>,
        median_delta_g_by_delta_t_g: Vec<(f64, f64)>,
        median_delta_s_by_delta_t_s: Vec<(f64, f64)>,
        conditional_independence: Option<CiResult>,
        conditional_independence_error: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        conditional_independence_male: Option<CiSection>,
        #[serde(skip_serializing_if = "Option::is_none")]
        conditional_independence_female: Option<CiSection>,
        n_pairs: usize,
        n_form_records: usize,
    }
    let body = AnalysisBody {
        median_delta_g_by_delta_t_g: median_by_x(&dt_g),
        median_delta_s_by_delta_t_s: median_by_x(&dt_s),
        pearson: pearson_tests,
        conditional_independence: ci.clone(),
        conditional_independence_error: ci_error.clone(),
        conditional_independence_male: ci_male.map(|(result, error)| CiSection { result, error }),
        conditional_independence_female: ci_female.map(|(result, error)| CiSection { result, error }),
        n_pairs: metrics.len(),
        n_form_records: forms.len(),
    };

    let out = &args.common.out_dir;
    write_file(out, "analysis.json", &json_report(&meta, &body)?)?;

    let mut csv = meta.comment_block();
    csv.push_str("test,x,y,n,statistic,p,method\n");
    for t in &body.pearson {
        if let (Some(r), Some(p)) = (t.r, t.p_two_sided) {
            csv.push_str(&format!("pearson,{},{},{},{},{},t_test\n", t.x, t.y, t.n, r, p));
        }
    }
    if let Some(ci) = &ci {
        csv.push_str(&format!(
            "jt_conditional_independence,n_tokens,f1,{},{},{},{}\n",
            forms.len(),
            ci.combined_z,
            ci.combined_p,
            ci.method
        ));
    }
    for (label, section) in [
        ("male", &body.conditional_independence_male),
        ("female", &body.conditional_independence_female),
    ] {
        if let Some(CiSection { result: Some(ci), .. }) = section {
            csv.push_str(&format!(
                "jt_conditional_independence_{label},n_tokens,f1,{},{},{},{}\n",
                forms.len() / 2,
                ci.combined_z,
                ci.combined_p,
                ci.method
            ));
        }
    }
    write_file(out, "analysis.csv", &csv)?;

    for t in &body.pearson {
        match (t.r, t.p_two_sided) {
            (Some(r), Some(p)) => println!("pearson({}, {}): r = {:+.4}, p = {:.4}, n = {}", t.x, t.y, r, p, t.n),
            _ => println!("pearson({}, {}): {}", t.x, t.y, t.error.as_deref().unwrap_or("failed")),
        }
    }
    match (&ci, &ci_error) {
        (Some(ci), _) => println!(
            "conditional independence (F1 ⊥ n_tokens | frequency): combined_p = {:.4} over {} strata",
            ci.combined_p, ci.n_strata
        ),
        (None, Some(err)) => println!("conditional independence: {err}"),
        _ => {}
    }
    Ok(())
}

pub(crate) fn freq(args: &FreqArgs) -> Result<(), CliError> {
    let cfg = match_config(&args.matching)?;
    let table = load_corpus_file(&args.corpus, cfg.normalization)?;
    let lex = args.lexicon.as_ref().map(|p| load_lexicon_file(p)).transpose()?;
    let meta = Meta::new(
        "freq",
        language(&args.common.lang, lex.as_ref()),
        args.common.seed,
        json!({
            "corpus": args.corpus,
            "lexicon": args.lexicon,
            "neutral_forms": args.neutral_forms,
            "case_fold": args.matching.case_fold,
        }),
    );
    let out = &args.common.out_dir;
    write_file(out, "frequency.tsv", &(meta.comment_block() + &table.to_tsv()))?;
    println!(
        "{} lines, {} tokens, {} distinct forms",
        table.n_lines,
        table.total_tokens,
        table.n_distinct_forms()
    );

    if let Some(lex) = &lex {
        let neutral: Option<Vec<String>> = match &args.neutral_forms {
            Some(path) => Some(load_lines(path)?.into_iter().filter(|l| !l.trim().is_empty()).collect()),
            None => None,
        };
        let report = form_ratio(&table, lex, neutral.as_deref());
        println!("neutral:female:male ratio = {}", report.ratio_string);
        write_file(out, "form_ratio.json", &json_report(&meta, &report)?)?;
    }
    Ok(())
}

pub(crate) fn protect_vocab(args: &ProtectVocabArgs) -> Result<(), CliError> {
    let vocab = load_vocab_file(&args.vocab)?;
    let lex = load_lexicon_file(&args.lexicon)?;
    let forms = lex.all_forms();
    let protected = protect_forms(&vocab, &forms);
    let out = &args.common.out_dir;
    write_file(out, "protected_vocab.tsv", &protected.to_tsv())?;
    println!(
        "protected {} forms; vocabulary grew {} -> {} entries",
        forms.len(),
        vocab.len(),
        protected.len()
    );
    Ok(())
}

pub(crate) fn train_tokenizer(args: &TrainTokenizerArgs) -> Result<(), CliError> {
    let file = File::open(&args.corpus)
        .with_context(|| format!("cannot read {}", args.corpus.display()))
        .map_err(CliError::Input)?;
    let params = TrainParams {
        seed_size: args.seed_size,
        em_iterations: args.em_iterations,
        prune_fraction: args.prune_fraction,
        max_token_length: args.max_token_length,
    };
    let vocab = train_unigram(file, args.vocab_size, &params)?;
    let out = &args.common.out_dir;
    write_file(out, "trained_vocab.tsv", &vocab.to_tsv())?;
    println!("trained vocabulary with {} entries (incl. unk)", vocab.len());
    Ok(())
}

pub(crate) fn gen_dataset(args: &GenDatasetArgs) -> Result<(), CliError> {
    let lex = load_lexicon_file(&args.lexicon)?;
    let templates = TargetTemplates {
        male_pattern: args.male_pattern.clone(),
        female_pattern: args.female_pattern.clone(),
    };
    let rows = generate_balanced(&lex, &templates)?;
    let out = &args.common.out_dir;
    write_file(out, "dataset.tsv", &rows_to_tsv(&rows))?;
    println!("generated {} rows ({} male, {} female)", rows.len(), rows.len() / 2, rows.len() / 2);
    Ok(())
}

pub(crate) fn bleu_cmd(args: &BleuArgs) -> Result<(), CliError> {
    let hypotheses = load_lines(&args.hypotheses)?;
    let references = load_lines(&args.references)?;
    let score: BleuScore = bleu(&hypotheses, &references)?;
    let meta = Meta::new(
        "bleu",
        args.common.lang.clone(),
        args.common.seed,
        json!({ "hypotheses": args.hypotheses, "references": args.references }),
    );
    write_file(&args.common.out_dir, "bleu.json", &json_report(&meta, &score)?)?;
    println!(
        "BLEU = {:.1} (BP = {:.4}, precisions = {:.4}/{:.4}/{:.4}/{:.4})",
        score.score,
        score.brevity_penalty,
        score.ngram_precisions[0],
        score.ngram_precisions[1],
        score.ngram_precisions[2],
        score.ngram_precisions[3]
    );
    Ok(())
}

pub(crate) fn pipeline(args: &PipelineArgs) -> Result<(), CliError> {
    tokens(&TokensArgs {
        vocab: args.vocab.clone(),
        lexicon: args.lexicon.clone(),
        common: args.common.clone(),
    })?;
    eval(&EvalArgs {
        lexicon: args.lexicon.clone(),
        winomt: args.winomt.clone(),
        outputs: args.outputs.clone(),
        vocab: Some(args.vocab.clone()),
        corpus: Some(args.corpus.clone()),
        matching: args.matching.clone(),
        common: args.common.clone(),
    })?;
    analyze(&AnalyzeArgs {
        lexicon: args.lexicon.clone(),
        winomt: args.winomt.clone(),
        outputs: args.outputs.clone(),
        vocab: args.vocab.clone(),
        corpus: args.corpus.clone(),
        matching: args.matching.clone(),
        stats: args.stats.clone(),
        common: args.common.clone(),
    })?;
    Ok(())
}
