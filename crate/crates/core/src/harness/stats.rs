//! Method ranking and the Friedman test over a datasets × methods table.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    /// `ranks[dataset][method]`, 1 = lowest error, ties averaged.
    pub ranks: Vec<Vec<f64>>,
    pub average: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Friedman {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

fn check(table: &[Vec<f64>]) -> Result<usize, HarnessError> {
    let k = table.first().map_or(0, Vec::len);
    if table.is_empty() || k == 0 {
        return Err(HarnessError::Table("table is empty".into()));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != k {
            return Err(HarnessError::Table(format!(
                "row {} has {} cells, expected {k}",
                i + 1,
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| v.is_nan()) {
            return Err(HarnessError::Table(format!("missing value in row {}, column {}", i + 1, j + 1)));
        }
    }
    Ok(k)
}

/// Ranks of one row, ascending, with tied values sharing their mean rank.
pub fn rank_row(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        let mean = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// `table[dataset][method]` of errors → per-dataset ranks and column means.
pub fn rank_methods(table: &[Vec<f64>]) -> Result<Ranking, HarnessError> {
    let k = check(table)?;
    let ranks: Vec<Vec<f64>> = table.iter().map(|r| rank_row(r)).collect();
    let n = ranks.len() as f64;
    let average = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    Ok(Ranking { ranks, average })
}

/// Friedman chi-square statistic with its upper-tail p-value on `k - 1`
/// degrees of freedom.
pub fn friedman_test(table: &[Vec<f64>]) -> Result<Friedman, HarnessError> {
    let k = check(table)?;
    let n = table.len();
    if k < 2 || n < 2 {
        return Err(HarnessError::Table(format!("need at least 2 methods and 2 datasets, have {k} and {n}")));
    }
    let ranking = rank_methods(table)?;
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = ranking.average.iter().map(|r| r * r).sum();
    let statistic = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let chi = ChiSquared::new((k - 1) as f64).map_err(|e| HarnessError::Table(e.to_string()))?;
    Ok(Friedman {
        statistic,
        degrees_of_freedom: k - 1,
        p_value: chi.sf(statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_share_mean_rank() {
        assert_eq!(rank_row(&[0.3, 0.1, 0.3, 0.2]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(rank_row(&[1.0; 5]), vec![3.0; 5]);
        assert_eq!(rank_row(&[7.0]), vec![1.0]);
    }

    #[test]
    fn one_method_best_everywhere() {
        // Ranks (1, 3.5, 3.5, 3.5, 3.5) on each of 9 datasets:
        // sum R^2 = 1 + 4 * 12.25 = 50, chi2 = 12*9/30 * (50 - 45) = 18,
        // and the 4-dof upper tail is e^{-9} (1 + 9).
        let table = vec![vec![0.1, 0.5, 0.5, 0.5, 0.5]; 9];
        let f = friedman_test(&table).unwrap();
        assert!((f.statistic - 18.0).abs() < 1e-12);
        assert_eq!(f.degrees_of_freedom, 4);
        assert!((f.p_value - 10.0 * (-9.0f64).exp()).abs() < 1e-12);
        assert!(f.p_value < 0.05);
    }

    #[test]
    fn identical_methods() {
        let f = friedman_test(&vec![vec![0.2; 5]; 9]).unwrap();
        assert_eq!(f.statistic, 0.0);
        assert!((f.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(rank_methods(&[]).is_err());
        assert!(rank_methods(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(rank_methods(&[vec![1.0, f64::NAN]]).is_err());
        assert!(friedman_test(&[vec![1.0], vec![2.0]]).is_err());
        assert!(friedman_test(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn single_method_ranks_one() {
        let r = rank_methods(&[vec![0.4], vec![0.9]]).unwrap();
        assert_eq!(r.average, vec![1.0]);
    }
}
