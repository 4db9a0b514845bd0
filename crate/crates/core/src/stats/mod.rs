//! Statistical engine: Pearson correlation with significance, the
//! Jonckheere-Terpstra ordered-alternative test, and the frequency-stratified
//! conditional-independence procedure built on it.

mod ci;
mod jt;

pub use ci::{conditional_independence, CiRecord, CiResult, StratumResult};
pub use jt::{jonckheere_terpstra, Alternative, JtMethod, JtMode, JtResult};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("correlation is undefined for a constant {0} sequence")]
    ConstantInput(&'static str),
    #[error("Jonckheere-Terpstra needs at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("conditional independence needs at least {need} records for {n_strata} strata, got {got}")]
    TooFewRecords { need: usize, n_strata: usize, got: usize },
    #[error("all records share one token count; no ordered groups to test")]
    DegenerateGroups,
    #[error("n_strata must be at least 1")]
    ZeroStrata,
}

/// Sample Pearson correlation with a two-sided t-test p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_two_sided: f64,
    pub n: usize,
}

/// Pearson correlation of two equally long sequences (n ≥ 3, neither
/// constant). The p-value tests r = 0 via t = r·sqrt((n−2)/(1−r²)) against
/// the t distribution with n−2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations { need: 3, got: n });
    }
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantInput("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ConstantInput("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);

    let df = (n - 2) as f64;
    let p_two_sided = if 1.0 - r * r <= 0.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
    };
    Ok(CorrelationResult { r, p_two_sided, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_positive_correlation() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(r.r, 1.0);
        assert_eq!(r.p_two_sided, 0.0);
    }

    #[test]
    fn perfect_negative_correlation() {
        let r = pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap();
        assert_eq!(r.r, -1.0);
    }

    #[test]
    fn worked_five_point_example() {
        // independent high-precision evaluation of the closed form and t-CDF:
        // r = 0.8, p = 0.10408803866182799
        let r = pearson(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r.r - 0.8).abs() < 1e-12, "r = {}", r.r);
        assert!((r.p_two_sided - 0.104088038661828).abs() < 1e-9, "p = {}", r.p_two_sided);
        assert_eq!(r.n, 5);
    }

    #[test]
    fn constant_input_is_error() {
        let err = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, StatsError::ConstantInput("x")), "{err}");
    }

    #[test]
    fn length_mismatch_is_error() {
        let err = pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, StatsError::LengthMismatch(2, 3)), "{err}");
    }

    #[test]
    fn too_short_is_error() {
        let err = pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, StatsError::TooFewObservations { .. }), "{err}");
    }

    #[test]
    fn symmetry_and_scale_invariance() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let y = [3.0, 1.0, 4.0, 1.0, 5.0];
        let rxy = pearson(&x, &y).unwrap();
        let ryx = pearson(&y, &x).unwrap();
        assert_eq!(rxy.r, ryx.r);

        let scaled: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        let rs = pearson(&scaled, &y).unwrap();
        assert!((rs.r - rxy.r).abs() < 1e-12);

        let flipped: Vec<f64> = x.iter().map(|v| -2.0 * v + 1.0).collect();
        let rf = pearson(&flipped, &y).unwrap();
        assert!((rf.r + rxy.r).abs() < 1e-12);
    }
}
