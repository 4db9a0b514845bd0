//! Jonckheere-Terpstra test for a monotone trend across ordered groups.
//!
//! The statistic counts, over every ordered group pair (i < j), the
//! cross-group value pairs with a < b, crediting ½ per tie. Small samples are
//! handled by the exact permutation distribution (full enumeration when
//! feasible, otherwise seeded Monte Carlo); large samples by the normal
//! approximation with the tie-corrected variance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

/// Arrangements at or below this bound are fully enumerated in exact mode;
/// anything larger falls back to Monte Carlo.
const ENUMERATION_CAP: u128 = 100_000;

/// Monte Carlo permutations drawn in exact mode.
pub const MC_PERMUTATIONS: u32 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Values tend to increase along the group order (large J).
    Increasing,
    /// Values tend to decrease along the group order (small J).
    Decreasing,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JtMode {
    /// Exact when the pooled sample has at most 20 observations, else normal.
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JtMethod {
    ExactPermutation,
    NormalApprox,
}

impl std::fmt::Display for JtMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JtMethod::ExactPermutation => "exact_permutation",
            JtMethod::NormalApprox => "normal_approx",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JtResult {
    /// J, a multiple of ½ in the presence of ties.
    pub statistic: f64,
    pub mean_h0: f64,
    pub variance_h0: f64,
    pub z: f64,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub method: JtMethod,
    pub n_groups: usize,
    pub n_total: usize,
}

/// Runs the test on samples given in their hypothesized order.
pub fn jonckheere_terpstra(
    groups: &[Vec<f64>],
    alternative: Alternative,
    mode: JtMode,
    seed: u64,
) -> Result<JtResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(StatsError::EmptyGroup(i));
        }
    }

    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let n_total: usize = sizes.iter().sum();
    let values: Vec<f64> = groups.iter().flatten().copied().collect();
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
        .collect();

    // everything statistic-related is kept in half units so comparisons stay exact
    let j2_obs = j2(&values, &labels);
    let mean2 = mean2_h0(&sizes);
    let all_tied = values.iter().all(|&v| v == values[0]);
    let variance_h0 = if all_tied { 0.0 } else { variance_h0(&sizes, &values).max(0.0) };

    let z = if variance_h0 > 0.0 {
        (j2_obs as f64 - mean2 as f64) / 2.0 / variance_h0.sqrt()
    } else {
        0.0
    };

    let use_exact = match mode {
        JtMode::Exact => true,
        JtMode::Normal => false,
        JtMode::Auto => n_total <= 20,
    };

    let (p_ge, p_le, method) = if variance_h0 <= 0.0 {
        // all pooled values tied: every arrangement yields J = mean
        (1.0, 1.0, if use_exact { JtMethod::ExactPermutation } else { JtMethod::NormalApprox })
    } else if use_exact {
        let (ge, le) = exact_tail_probs(&values, &sizes, j2_obs, seed);
        (ge, le, JtMethod::ExactPermutation)
    } else {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (normal.cdf(-z), normal.cdf(z), JtMethod::NormalApprox)
    };

    let p_one_sided = match alternative {
        Alternative::Increasing => p_ge,
        Alternative::Decreasing => p_le,
        Alternative::TwoSided => p_ge.min(p_le),
    };
    let p_two_sided = (2.0 * p_ge.min(p_le)).min(1.0);

    Ok(JtResult {
        statistic: j2_obs as f64 / 2.0,
        mean_h0: mean2 as f64 / 2.0,
        variance_h0,
        z,
        p_one_sided,
        p_two_sided,
        method,
        n_groups: groups.len(),
        n_total,
    })
}

/// J in half units: 2 per concordant cross-group pair, 1 per tie.
pub(super) fn j2(values: &[f64], labels: &[usize]) -> u64 {
    let n = values.len();
    let mut total = 0u64;
    for a in 0..n {
        for b in 0..n {
            if labels[a] < labels[b] {
                if values[a] < values[b] {
                    total += 2;
                } else if values[a] == values[b] {
                    total += 1;
                }
            }
        }
    }
    total
}

/// H0 mean in half units: (N² − Σnᵢ²) / 2.
pub(super) fn mean2_h0(sizes: &[usize]) -> u64 {
    let n: u64 = sizes.iter().map(|&s| s as u64).sum();
    let sq: u64 = sizes.iter().map(|&s| (s as u64) * (s as u64)).sum();
    (n * n - sq) / 2
}

/// Tie-corrected null variance of J.
pub(super) fn variance_h0(sizes: &[usize], values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_sizes: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        tie_sizes.push((j - i) as f64);
        i = j;
    }

    let s1: f64 = sizes.iter().map(|&s| s as f64).map(|s| s * (s - 1.0) * (2.0 * s + 5.0)).sum();
    let t1: f64 = tie_sizes.iter().map(|&t| t * (t - 1.0) * (2.0 * t + 5.0)).sum();
    let term1 = (n * (n - 1.0) * (2.0 * n + 5.0) - s1 - t1) / 72.0;

    let s2: f64 = sizes.iter().map(|&s| s as f64).map(|s| s * (s - 1.0) * (s - 2.0)).sum();
    let t2: f64 = tie_sizes.iter().map(|&t| t * (t - 1.0) * (t - 2.0)).sum();
    let term2 = if n > 2.0 { s2 * t2 / (36.0 * n * (n - 1.0) * (n - 2.0)) } else { 0.0 };

    let s3: f64 = sizes.iter().map(|&s| s as f64).map(|s| s * (s - 1.0)).sum();
    let t3: f64 = tie_sizes.iter().map(|&t| t * (t - 1.0)).sum();
    let term3 = s3 * t3 / (8.0 * n * (n - 1.0));

    term1 + term2 + term3
}

fn multinomial_arrangements(sizes: &[usize]) -> Option<u128> {
    let mut remaining: usize = sizes.iter().sum();
    let mut total: u128 = 1;
    for &size in sizes {
        for k in 0..size {
            total = total.checked_mul((remaining - k) as u128)?;
            total /= (k + 1) as u128;
            if total > ENUMERATION_CAP * 1_000 {
                return None;
            }
        }
        remaining -= size;
    }
    Some(total)
}

/// Exact tail probabilities P(J* ≥ J) and P(J* ≤ J) under permutation of the
/// pooled values: full enumeration of label arrangements when their count is
/// small, otherwise seeded Monte Carlo with an add-one estimate.
fn exact_tail_probs(values: &[f64], sizes: &[usize], j2_obs: u64, seed: u64) -> (f64, f64) {
    match multinomial_arrangements(sizes) {
        Some(count) if count <= ENUMERATION_CAP => {
            let mut ge = 0u64;
            let mut le = 0u64;
            let mut total = 0u64;
            let mut labels = Vec::with_capacity(values.len());
            let mut remaining: Vec<usize> = sizes.to_vec();
            enumerate_labelings(values, &mut labels, &mut remaining, &mut |labels| {
                let j2_perm = j2(values, labels);
                total += 1;
                if j2_perm >= j2_obs {
                    ge += 1;
                }
                if j2_perm <= j2_obs {
                    le += 1;
                }
            });
            debug_assert_eq!(total as u128, count);
            (ge as f64 / total as f64, le as f64 / total as f64)
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled: Vec<f64> = values.to_vec();
            let labels: Vec<usize> = sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
                .collect();
            let mut ge = 0u64;
            let mut le = 0u64;
            for _ in 0..MC_PERMUTATIONS {
                shuffled.shuffle(&mut rng);
                let j2_perm = j2(&shuffled, &labels);
                if j2_perm >= j2_obs {
                    ge += 1;
                }
                if j2_perm <= j2_obs {
                    le += 1;
                }
            }
            let denom = (MC_PERMUTATIONS + 1) as f64;
            (((ge + 1) as f64) / denom, ((le + 1) as f64) / denom)
        }
    }
}

fn enumerate_labelings(
    values: &[f64],
    labels: &mut Vec<usize>,
    remaining: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if labels.len() == values.len() {
        visit(labels);
        return;
    }
    for g in 0..remaining.len() {
        if remaining[g] == 0 {
            continue;
        }
        remaining[g] -= 1;
        labels.push(g);
        enumerate_labelings(values, labels, remaining, visit);
        labels.pop();
        remaining[g] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn groups(data: &[&[f64]]) -> Vec<Vec<f64>> {
        data.iter().map(|g| g.to_vec()).collect()
    }

    #[test]
    fn maximal_increasing_arrangement() {
        let g = groups(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let r = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Auto, 7).unwrap();
        assert_eq!(r.statistic, 12.0);
        assert_eq!(r.mean_h0, 6.0);
        assert!(r.p_one_sided < 0.05, "p = {}", r.p_one_sided);
        assert_eq!(r.method, JtMethod::ExactPermutation);
    }

    #[test]
    fn total_reversal_gives_zero() {
        let g = groups(&[&[5.0, 6.0], &[3.0, 4.0], &[1.0, 2.0]]);
        let r = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Auto, 7).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_one_sided > 0.9);
    }

    #[test]
    fn tie_halves_counted() {
        let g = groups(&[&[1.0, 2.0], &[1.0, 2.0]]);
        let r = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Auto, 7).unwrap();
        assert_eq!(r.statistic, 2.0);
        assert_eq!(r.mean_h0, 2.0);
    }

    #[test]
    fn statistic_bounded_by_pair_count() {
        let g = groups(&[&[9.0, 9.0, 9.0], &[9.0, 9.0], &[9.0]]);
        let r = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Auto, 7).unwrap();
        // all tied: J = half of the 11 cross pairs, and no spread under H0
        assert_eq!(r.statistic, 5.5);
        assert_eq!(r.variance_h0, 0.0);
        assert_eq!(r.p_one_sided, 1.0);
    }

    #[test]
    fn fewer_than_two_groups_is_error() {
        let err = jonckheere_terpstra(&[vec![1.0]], Alternative::Increasing, JtMode::Auto, 7).unwrap_err();
        assert!(matches!(err, StatsError::TooFewGroups(1)), "{err}");
    }

    #[test]
    fn empty_group_is_error() {
        let err =
            jonckheere_terpstra(&[vec![1.0], vec![]], Alternative::Increasing, JtMode::Auto, 7).unwrap_err();
        assert!(matches!(err, StatsError::EmptyGroup(1)), "{err}");
    }

    #[test]
    fn normal_mode_reports_z_based_p() {
        let g = groups(&[&[1.0, 3.0, 2.0], &[4.0, 6.0, 5.0], &[7.0, 9.0, 8.0]]);
        let r = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Normal, 7).unwrap();
        assert_eq!(r.method, JtMethod::NormalApprox);
        assert_eq!(r.statistic, 27.0);
        assert!(r.z > 2.0);
        assert!(r.p_one_sided < 0.05);
    }

    #[test]
    fn decreasing_alternative_flips_the_tail() {
        let g = groups(&[&[5.0, 6.0], &[3.0, 4.0], &[1.0, 2.0]]);
        let r = jonckheere_terpstra(&g, Alternative::Decreasing, JtMode::Auto, 7).unwrap();
        assert!(r.p_one_sided < 0.05, "p = {}", r.p_one_sided);
    }

    #[test]
    fn rank_invariance_under_monotone_transform() {
        let g = groups(&[&[1.0, 3.0, 2.0], &[4.0, 2.0], &[5.0, 7.0, 6.0]]);
        let r1 = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Exact, 11).unwrap();
        let transformed: Vec<Vec<f64>> =
            g.iter().map(|grp| grp.iter().map(|v| (v * 0.5).exp()).collect()).collect();
        let r2 = jonckheere_terpstra(&transformed, Alternative::Increasing, JtMode::Exact, 11).unwrap();
        assert_eq!(r1.statistic, r2.statistic);
        assert_eq!(r1.p_one_sided, r2.p_one_sided);
        assert_eq!(r1.z, r2.z);
    }

    #[test]
    fn mc_path_is_reproducible() {
        // group sizes force Monte Carlo (arrangement count above the cap)
        let g: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..9).map(|i| (i * 7 + k * 3) as f64 % 10.0).collect())
            .collect();
        let a = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Exact, 99).unwrap();
        let b = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Exact, 99).unwrap();
        assert_eq!(a.p_one_sided, b.p_one_sided);
        let c = jonckheere_terpstra(&g, Alternative::Increasing, JtMode::Exact, 100).unwrap();
        assert_ne!(a.p_one_sided, c.p_one_sided);
    }
}
