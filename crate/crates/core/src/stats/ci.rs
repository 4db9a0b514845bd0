//! Frequency-stratified conditional-independence check: is F1 independent of
//! the token count once corpus frequency is held fixed?
//!
//! Records are cut into equal-size frequency quantile strata; within each
//! stratum a Jonckheere-Terpstra test with a decreasing alternative (more
//! tokens → lower F1) runs over the token-count-ordered groups. Per-stratum
//! statistics combine into one test by summing the centered statistics and
//! pooling the null variances (normal mode) or by a joint within-stratum
//! permutation (exact mode).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::jt::{j2, jonckheere_terpstra, Alternative, JtMethod, JtMode, JtResult, MC_PERMUTATIONS};
use super::StatsError;

/// One profession-form observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiRecord {
    pub f1: f64,
    pub n_tokens: usize,
    pub frequency: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StratumResult {
    /// Smallest and largest frequency in the stratum.
    pub freq_range: (u64, u64),
    /// Group sizes in ascending token-count order.
    pub group_sizes: Vec<usize>,
    /// The distinct token counts defining the groups.
    pub token_levels: Vec<usize>,
    pub jt: JtResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct CiResult {
    pub strata: Vec<StratumResult>,
    pub combined_z: f64,
    /// One-sided p for the decreasing alternative; small values reject
    /// conditional independence in favor of a token-count effect.
    pub combined_p: f64,
    pub n_strata: usize,
    pub seed: u64,
    pub method: JtMethod,
}

/// Runs the stratified test with `n_strata` frequency quantile strata.
///
/// Strata whose records all share one token count cannot be tested and are
/// merged into their neighbor. With a single stratum the procedure reduces
/// exactly to one unconditional Jonckheere-Terpstra test.
pub fn conditional_independence(
    records: &[CiRecord],
    n_strata: usize,
    mode: JtMode,
    seed: u64,
) -> Result<CiResult, StatsError> {
    if n_strata == 0 {
        return Err(StatsError::ZeroStrata);
    }
    if records.len() < 3 * n_strata {
        return Err(StatsError::TooFewRecords { need: 3 * n_strata, n_strata, got: records.len() });
    }

    let mut sorted: Vec<&CiRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.frequency);

    // equal-size quantile cuts; the first (len % n_strata) strata get one extra
    let mut strata: Vec<Vec<&CiRecord>> = Vec::with_capacity(n_strata);
    let base = sorted.len() / n_strata;
    let extra = sorted.len() % n_strata;
    let mut offset = 0;
    for i in 0..n_strata {
        let size = base + usize::from(i < extra);
        strata.push(sorted[offset..offset + size].to_vec());
        offset += size;
    }

    // merge strata with fewer than two token-count groups into a neighbor
    let mut i = 0;
    while i < strata.len() {
        if distinct_token_counts(&strata[i]) >= 2 {
            i += 1;
            continue;
        }
        if strata.len() == 1 {
            return Err(StatsError::DegenerateGroups);
        }
        let degenerate = strata.remove(i);
        if i < strata.len() {
            // records are frequency-sorted, so prepend to the next stratum
            let mut merged = degenerate;
            merged.extend(strata[i].iter().copied());
            strata[i] = merged;
        } else {
            strata[i - 1].extend(degenerate);
            i -= 1;
        }
    }

    let groups_per_stratum: Vec<(Vec<usize>, Vec<Vec<f64>>)> =
        strata.iter().map(|s| token_groups(s)).collect();

    let n_total: usize = strata.iter().map(Vec::len).sum();
    let use_exact = match mode {
        JtMode::Exact => true,
        JtMode::Normal => false,
        JtMode::Auto => n_total <= 20,
    };

    // single stratum: delegate wholesale so statistic and p are bit-identical
    // to the unconditional test under the same seed and mode
    if strata.len() == 1 {
        let (levels, groups) = &groups_per_stratum[0];
        let jt = jonckheere_terpstra(groups, Alternative::Decreasing, mode, seed)?;
        let stratum = StratumResult {
            freq_range: freq_range(&strata[0]),
            group_sizes: groups.iter().map(Vec::len).collect(),
            token_levels: levels.clone(),
            jt,
        };
        return Ok(CiResult {
            combined_z: jt.z,
            combined_p: jt.p_one_sided,
            n_strata: 1,
            seed,
            method: jt.method,
            strata: vec![stratum],
        });
    }

    let mut stratum_results = Vec::with_capacity(strata.len());
    let mut centered_sum = 0.0; // Σ (J_s − mean_s)
    let mut variance_sum = 0.0;
    for (idx, ((levels, groups), stratum)) in groups_per_stratum.iter().zip(&strata).enumerate() {
        let jt = jonckheere_terpstra(
            groups,
            Alternative::Decreasing,
            mode,
            seed.wrapping_add(idx as u64 + 1),
        )?;
        centered_sum += jt.statistic - jt.mean_h0;
        variance_sum += jt.variance_h0;
        stratum_results.push(StratumResult {
            freq_range: freq_range(stratum),
            group_sizes: groups.iter().map(Vec::len).collect(),
            token_levels: levels.clone(),
            jt,
        });
    }

    let combined_z = if variance_sum > 0.0 { centered_sum / variance_sum.sqrt() } else { 0.0 };
    let (combined_p, method) = if use_exact {
        let p = joint_permutation_p(&groups_per_stratum, seed);
        (p, JtMethod::ExactPermutation)
    } else {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let p = if variance_sum > 0.0 { normal.cdf(combined_z) } else { 1.0 };
        (p, JtMethod::NormalApprox)
    };

    Ok(CiResult {
        strata: stratum_results,
        combined_z,
        combined_p,
        n_strata: strata.len(),
        seed,
        method,
    })
}

fn distinct_token_counts(records: &[&CiRecord]) -> usize {
    let mut counts: Vec<usize> = records.iter().map(|r| r.n_tokens).collect();
    counts.sort_unstable();
    counts.dedup();
    counts.len()
}

fn freq_range(records: &[&CiRecord]) -> (u64, u64) {
    let min = records.iter().map(|r| r.frequency).min().unwrap_or(0);
    let max = records.iter().map(|r| r.frequency).max().unwrap_or(0);
    (min, max)
}

/// Groups a stratum's F1 values by token count, ascending.
fn token_groups(records: &[&CiRecord]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut sorted: Vec<&&CiRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.n_tokens);
    let mut levels: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for record in sorted {
        if levels.last() != Some(&record.n_tokens) {
            levels.push(record.n_tokens);
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(record.f1);
    }
    (levels, groups)
}

/// Joint within-stratum permutation: p = P(Σ centered J* ≤ Σ centered J) for
/// the decreasing alternative, with an add-one Monte Carlo estimate.
fn joint_permutation_p(groups_per_stratum: &[(Vec<usize>, Vec<Vec<f64>>)], seed: u64) -> f64 {
    struct Stratum {
        values: Vec<f64>,
        labels: Vec<usize>,
    }
    let strata: Vec<Stratum> = groups_per_stratum
        .iter()
        .map(|(_, groups)| Stratum {
            values: groups.iter().flatten().copied().collect(),
            labels: groups
                .iter()
                .enumerate()
                .flat_map(|(g, grp)| std::iter::repeat_n(g, grp.len()))
                .collect(),
        })
        .collect();

    // the per-stratum means are permutation-invariant, so comparing summed raw
    // J2 values is equivalent to comparing summed centered statistics
    let observed: u64 = strata.iter().map(|s| j2(&s.values, &s.labels)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut le = 0u64;
    let mut shuffled: Vec<Vec<f64>> = strata.iter().map(|s| s.values.clone()).collect();
    for _ in 0..MC_PERMUTATIONS {
        let mut total = 0u64;
        for (stratum, values) in strata.iter().zip(shuffled.iter_mut()) {
            values.shuffle(&mut rng);
            total += j2(values, &stratum.labels);
        }
        if total <= observed {
            le += 1;
        }
    }
    ((le + 1) as f64) / ((MC_PERMUTATIONS + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn record(f1: f64, n_tokens: usize, frequency: u64) -> CiRecord {
        CiRecord { f1, n_tokens, frequency }
    }

    /// Frequency drives both F1 and token count through stratum-constant
    /// steps; the within-stratum variation is independent noise.
    fn confounded_fixture(seed: u64, n: usize, n_strata: usize) -> Vec<CiRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let band = i * n_strata / n; // matches the quantile cut exactly
            let frequency = (band as u64 + 1) * 1000 + rng.gen_range(0..900);
            let base_tokens = 4 - band.min(3);
            let tokens = (base_tokens as i64 + rng.gen_range(-1..=1)).max(1) as usize;
            let f1 = (0.2 + 0.2 * band as f64 + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0);
            records.push(record(f1, tokens, frequency));
        }
        records
    }

    #[test]
    fn confounded_records_do_not_reject() {
        let records = confounded_fixture(5, 60, 3);
        let result = conditional_independence(&records, 3, JtMode::Normal, 5).unwrap();
        assert!(result.combined_p > 0.05, "p = {}", result.combined_p);

        // independent check against the joint permutation distribution
        let perm = conditional_independence(&records, 3, JtMode::Exact, 5).unwrap();
        assert!(perm.combined_p > 0.05, "permutation p = {}", perm.combined_p);
    }

    #[test]
    fn within_stratum_penalty_rejects() {
        // f1 strictly decreases in token count inside every stratum
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut records = Vec::new();
        for i in 0..60 {
            let band = i / 20;
            let frequency = (band as u64 + 1) * 1000 + (i as u64 % 20) * 10;
            let tokens = 1 + (i % 4);
            let f1 = 0.9 - 0.15 * tokens as f64 + 0.1 * band as f64 + rng.gen_range(-0.01..0.01);
            records.push(record(f1.clamp(0.0, 1.0), tokens, frequency));
        }
        let result = conditional_independence(&records, 3, JtMode::Normal, 9).unwrap();
        assert!(result.combined_p < 0.01, "p = {}", result.combined_p);
        let perm = conditional_independence(&records, 3, JtMode::Exact, 9).unwrap();
        assert!(perm.combined_p < 0.01, "permutation p = {}", perm.combined_p);
    }

    #[test]
    fn single_stratum_matches_unconditional_jt_bitwise() {
        let records = confounded_fixture(11, 24, 1);
        // the procedure's token grouping sorts by frequency first
        let mut by_freq: Vec<&CiRecord> = records.iter().collect();
        by_freq.sort_by_key(|r| r.frequency);
        for mode in [JtMode::Normal, JtMode::Exact] {
            let ci = conditional_independence(&records, 1, mode, 123).unwrap();
            let (_, groups) = token_groups(&by_freq);
            let jt = jonckheere_terpstra(&groups, Alternative::Decreasing, mode, 123).unwrap();
            assert_eq!(ci.strata[0].jt.statistic, jt.statistic);
            assert_eq!(ci.combined_p, jt.p_one_sided);
            assert_eq!(ci.combined_z, jt.z);
        }
    }

    #[test]
    fn too_few_records_is_error() {
        let records = confounded_fixture(3, 8, 3);
        let err = conditional_independence(&records, 3, JtMode::Normal, 3).unwrap_err();
        assert!(matches!(err, StatsError::TooFewRecords { need: 9, .. }), "{err}");
    }

    #[test]
    fn degenerate_token_counts_is_error() {
        let records: Vec<CiRecord> = (0..12).map(|i| record(0.5, 2, i)).collect();
        let err = conditional_independence(&records, 2, JtMode::Normal, 3).unwrap_err();
        assert!(matches!(err, StatsError::DegenerateGroups), "{err}");
    }

    #[test]
    fn singleton_group_strata_are_merged() {
        // stratum 0 (low freq) has only token count 2 → merged into stratum 1
        let mut records = Vec::new();
        for i in 0..6 {
            records.push(record(0.3 + 0.01 * i as f64, 2, 10 + i));
        }
        for i in 0..6 {
            records.push(record(0.5 + 0.01 * i as f64, 1 + (i as usize % 3), 1000 + i));
        }
        let result = conditional_independence(&records, 2, JtMode::Normal, 3).unwrap();
        assert_eq!(result.n_strata, 1);
        assert_eq!(result.strata[0].group_sizes.iter().sum::<usize>(), 12);
    }

    #[test]
    fn deterministic_under_seed() {
        let records = confounded_fixture(21, 60, 3);
        let a = conditional_independence(&records, 3, JtMode::Exact, 77).unwrap();
        let b = conditional_independence(&records, 3, JtMode::Exact, 77).unwrap();
        assert_eq!(a.combined_p, b.combined_p);
    }
}
