//! Partition-agreement and classification metrics: adjusted Rand index,
//! V-measure, balanced accuracy and its cluster-matched variant.
//!
//! ARI is also the EM convergence measure: two successive hard clusterings
//! are compared and the loop stops once they agree closely enough.

use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("label length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("metric needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

fn check_lengths(left: usize, right: usize) -> Result<(), MetricError> {
    if left != right {
        return Err(MetricError::LengthMismatch { left, right });
    }
    Ok(())
}

/// Counts of co-labelled samples between two labelings.
///
/// Rows index the distinct values of the first labeling, columns those of the
/// second, both in ascending label order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn from_labels<A: Ord + Copy, B: Ord + Copy>(a: &[A], b: &[B]) -> Result<Self, MetricError> {
        check_lengths(a.len(), b.len())?;
        let row_index = dense_index(a);
        let col_index = dense_index(b);
        let mut counts = vec![vec![0u64; col_index.len()]; row_index.len()];
        for (x, y) in a.iter().zip(b) {
            counts[row_index[x]][col_index[y]] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..col_index.len()).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { counts, row_sums, col_sums, total: a.len() as u64 })
    }
}

fn dense_index<T: Ord + Copy>(labels: &[T]) -> BTreeMap<T, usize> {
    let mut map: BTreeMap<T, usize> = labels.iter().map(|&l| (l, 0)).collect();
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    map
}

fn pairs(n: u64) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

/// Adjusted Rand index under the permutation model.
///
/// The index is evaluated as an exact integer ratio before the final
/// division, so equal partitions pairs always give bit-identical results.
/// Degenerate cases where both labelings are trivial (one cluster each, or
/// all singletons each) score 1.
pub fn adjusted_rand_index<A: Ord + Copy, B: Ord + Copy>(a: &[A], b: &[B]) -> Result<f64, MetricError> {
    check_lengths(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(MetricError::TooFewSamples { needed: 2, got: a.len() });
    }
    let table = ContingencyTable::from_labels(a, b)?;
    let index: i128 = table.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_a: i128 = table.row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_b: i128 = table.col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(table.total);
    // ARI = (index - E) / (max - E) with E = sum_a*sum_b/total, max = (sum_a+sum_b)/2,
    // scaled by 2*total to stay in integers.
    let num = 2 * (total * index - sum_a * sum_b);
    let den = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

fn entropy(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Homogeneity, completeness and V-measure of `predicted` against `truth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VMeasure {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

pub fn homogeneity_completeness_v_measure<A: Ord + Copy, B: Ord + Copy>(
    truth: &[A],
    predicted: &[B],
) -> Result<VMeasure, MetricError> {
    let table = ContingencyTable::from_labels(truth, predicted)?;
    if table.total == 0 {
        return Ok(VMeasure { homogeneity: 1.0, completeness: 1.0, v_measure: 1.0 });
    }
    let n = table.total as f64;
    let h_truth = entropy(&table.row_sums, table.total);
    let h_pred = entropy(&table.col_sums, table.total);
    // H(truth | pred) and H(pred | truth) straight from the joint counts.
    let mut h_truth_given_pred = 0.0;
    let mut h_pred_given_truth = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            h_truth_given_pred -= c / n * (c / table.col_sums[j] as f64).ln();
            h_pred_given_truth -= c / n * (c / table.row_sums[i] as f64).ln();
        }
    }
    let homogeneity = if h_truth == 0.0 { 1.0 } else { 1.0 - h_truth_given_pred / h_truth };
    let completeness = if h_pred == 0.0 { 1.0 } else { 1.0 - h_pred_given_truth / h_pred };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(VMeasure { homogeneity, completeness, v_measure })
}

pub fn v_measure<A: Ord + Copy, B: Ord + Copy>(truth: &[A], predicted: &[B]) -> Result<f64, MetricError> {
    Ok(homogeneity_completeness_v_measure(truth, predicted)?.v_measure)
}

/// Mean of per-class recalls over the classes present in `truth`. Predicted
/// values outside the truth alphabet simply count as errors.
pub fn balanced_accuracy<T: Ord + Copy>(truth: &[T], predicted: &[T]) -> Result<f64, MetricError> {
    check_lengths(truth.len(), predicted.len())?;
    if truth.is_empty() {
        return Err(MetricError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut per_class: BTreeMap<T, (u64, u64)> = BTreeMap::new();
    for (t, p) in truth.iter().zip(predicted) {
        let entry = per_class.entry(*t).or_default();
        entry.1 += 1;
        if t == p {
            entry.0 += 1;
        }
    }
    let recall_sum: f64 = per_class.values().map(|&(hit, n)| hit as f64 / n as f64).sum();
    Ok(recall_sum / per_class.len() as f64)
}

/// Balanced accuracy of a clustering after the best one-to-one matching of
/// clusters to truth classes. Clusters left unmatched count as errors.
pub fn cluster_balanced_accuracy<A: Ord + Copy, B: Ord + Copy>(truth: &[A], clusters: &[B]) -> Result<f64, MetricError> {
    if truth.is_empty() {
        return Err(MetricError::TooFewSamples { needed: 1, got: 0 });
    }
    let table = ContingencyTable::from_labels(truth, clusters)?;
    let recall: Vec<Vec<f64>> = table
        .counts
        .iter()
        .zip(&table.row_sums)
        .map(|(row, &n)| row.iter().map(|&c| c as f64 / n as f64).collect())
        .collect();
    let assignment = max_weight_assignment(&recall);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| recall[r][c]))
        .sum();
    Ok(total / table.row_sums.len() as f64)
}

/// Maximum-weight bipartite matching of rows to columns (Hungarian method on
/// the padded square cost matrix). Returns the matched column for each row.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let max_w = weights.iter().flatten().copied().fold(0.0, f64::max);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            max_w - weights[i][j]
        } else {
            max_w
        }
    };
    // Classic O(n^3) potentials formulation, 1-based with a dummy column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![None; rows];
    for (j, &i) in matched_row.iter().enumerate().take(n + 1).skip(1) {
        if i >= 1 && i <= rows && j <= cols {
            result[i - 1] = Some(j - 1);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_worked_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), -0.5);
    }

    #[test]
    fn ari_errors() {
        assert_eq!(
            adjusted_rand_index(&[0, 1], &[0]),
            Err(MetricError::LengthMismatch { left: 2, right: 1 })
        );
        assert!(matches!(adjusted_rand_index(&[0], &[0]), Err(MetricError::TooFewSamples { .. })));
    }

    #[test]
    fn ari_trivial_partitions() {
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[5, 5, 5]).unwrap(), 1.0);
    }

    #[test]
    fn v_measure_cases() {
        assert!((v_measure(&[0, 0, 1, 1, 2, 2], &[3, 3, 4, 4, 5, 5]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(v_measure(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.0);
        let a = [0, 0, 1, 1, 1, 2];
        let b = [1, 0, 1, 1, 0, 0];
        assert!((v_measure(&a, &b).unwrap() - v_measure(&b, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn balanced_accuracy_cases() {
        assert_eq!(balanced_accuracy(&[1, 1, -1, -1], &[1, 1, -1, -1]).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&[1, 1, -1, -1], &[1, -1, -1, -1]).unwrap(), 0.75);
        assert_eq!(balanced_accuracy(&[1, 1, -1, -1], &[1, 1, 1, 1]).unwrap(), 0.5);
        assert!(balanced_accuracy::<i32>(&[], &[]).is_err());
    }

    #[test]
    fn cluster_balanced_accuracy_cases() {
        assert_eq!(cluster_balanced_accuracy(&[0, 0, 1, 1, 2], &[2, 2, 0, 0, 1]).unwrap(), 1.0);
        assert_eq!(cluster_balanced_accuracy(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.5);
        // more clusters than classes: the unmatched cluster counts against recall
        let b = cluster_balanced_accuracy(&[0, 0, 0, 0, 1, 1], &[0, 0, 2, 2, 1, 1]).unwrap();
        assert!((b - 0.75).abs() < 1e-15);
    }

    #[test]
    fn contingency_marginals() {
        let t = ContingencyTable::from_labels(&[0, 0, 1, 2], &[1, 1, 1, 0]).unwrap();
        assert_eq!(t.total, 4);
        assert_eq!(t.row_sums, vec![2, 1, 1]);
        assert_eq!(t.col_sums, vec![1, 3]);
        assert_eq!(t.counts.iter().flatten().sum::<u64>(), 4);
    }

    #[test]
    fn assignment_prefers_diagonal_of_best_weights() {
        let w = vec![vec![0.1, 0.9, 0.0], vec![0.8, 0.2, 0.0], vec![0.0, 0.0, 0.5]];
        assert_eq!(max_weight_assignment(&w), vec![Some(1), Some(0), Some(2)]);
        let wide = vec![vec![0.1, 0.2, 0.9]];
        assert_eq!(max_weight_assignment(&wide), vec![Some(2)]);
    }
}
