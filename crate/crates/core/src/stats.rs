//! Binomial intervals and contingency-table tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Standard error of a binomial proportion with true rate `p`.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Pearson chi-square test of homogeneity on a table of counts (rows are
/// populations, columns are categories). Categories with zero total count
/// are dropped. No continuity correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

pub fn chi_square_homogeneity(table: &[Vec<u64>]) -> ChiSquareTest {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    let row_totals: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_totals: Vec<f64> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64)
        .collect();
    let grand: f64 = row_totals.iter().sum();
    let live: Vec<usize> = (0..cols).filter(|&c| col_totals[c] > 0.0).collect();
    let live_rows = row_totals.iter().filter(|t| **t > 0.0).count();

    let mut statistic = 0.0;
    for (r, row) in table.iter().enumerate() {
        if row_totals[r] == 0.0 {
            continue;
        }
        for &c in &live {
            let expected = row_totals[r] * col_totals[c] / grand;
            statistic += (row[c] as f64 - expected).powi(2) / expected;
        }
    }
    let degrees_of_freedom = live.len().saturating_sub(1) * live_rows.saturating_sub(1);
    let p_value = if degrees_of_freedom == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(degrees_of_freedom as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    debug_assert!(rows == 0 || table.iter().all(|r| r.len() == cols));
    ChiSquareTest {
        statistic,
        degrees_of_freedom,
        p_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_value() {
        let (lo, hi) = wilson_interval(50, 100, Z_95);
        assert!((lo - 0.404).abs() < 1e-3, "{lo}");
        assert!((hi - 0.596).abs() < 1e-3, "{hi}");
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 20, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.2);
        let (lo, hi) = wilson_interval(1000, 1000, Z_95);
        assert!(lo > 0.99 && lo < 1.0);
        assert!((hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_square_identical_rows() {
        let t = chi_square_homogeneity(&[vec![10, 20, 30, 40], vec![10, 20, 30, 40]]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.degrees_of_freedom, 3);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_hand_computed() {
        // 2x2 table [[20, 30], [30, 20]]: every expected count is 25,
        // statistic = 4 * 25/25 = 4, p = P(χ²₁ > 4) ≈ 0.0455.
        let t = chi_square_homogeneity(&[vec![20, 30], vec![30, 20]]);
        assert!((t.statistic - 4.0).abs() < 1e-12);
        assert_eq!(t.degrees_of_freedom, 1);
        assert!((t.p_value - 0.045500263896).abs() < 1e-9, "{}", t.p_value);
    }

    #[test]
    fn chi_square_drops_empty_columns() {
        let t = chi_square_homogeneity(&[vec![10, 0, 10, 0], vec![12, 0, 8, 0]]);
        assert_eq!(t.degrees_of_freedom, 1);
    }
}
