//! Entropy, mutual information and permutation-tested feature ranking.
//!
//! All quantities are in bits. Pairwise statistics use pairwise deletion:
//! only objects on which both variables are defined contribute.
//!
//! Features are ranked by the normalized mutual information
//!
//! ```text
//! rho = I(X; Y) / min(H(X), H(Y))
//! ```
//!
//! which lies in `[0, 1]` and is comparable across vocabularies of different
//! sizes. A feature is significant when its observed mutual information
//! strictly exceeds the value on every one of `n_perm` random permutations
//! of the feature column.

use std::collections::HashMap;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

/// Shannon entropy in bits of a count vector. Zero counts contribute nothing.
pub fn entropy(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::ZeroCounts);
    }
    Ok(entropy_of(counts.iter().copied(), total))
}

fn entropy_of(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Joint counts of two categorical variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    /// Row-major, `row_labels.len()` by `col_labels.len()`.
    counts: Vec<usize>,
    n: usize,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if counts.len() != row_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: row_labels.len(),
                found: counts.len(),
            });
        }
        let mut flat = Vec::with_capacity(row_labels.len() * col_labels.len());
        for row in &counts {
            if row.len() != col_labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: col_labels.len(),
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let n = flat.iter().sum();
        Ok(Self {
            row_labels,
            col_labels,
            counts: flat,
            n,
        })
    }

    /// A table with positional labels `0, 1, ...`.
    pub fn from_counts(counts: Vec<Vec<usize>>) -> Result<Self> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        Self::new(
            (0..rows).map(|i| i.to_string()).collect(),
            (0..cols).map(|j| j.to_string()).collect(),
            counts,
        )
    }

    /// Tallies aligned sequences of codes `x[i] < n_x`, `y[i] < n_y`.
    pub fn from_codes(x: &[usize], y: &[usize], n_x: usize, n_y: usize) -> Self {
        let mut counts = vec![0; n_x * n_y];
        for (&a, &b) in x.iter().zip(y) {
            counts[a * n_y + b] += 1;
        }
        Self {
            row_labels: (0..n_x).map(|i| i.to_string()).collect(),
            col_labels: (0..n_y).map(|j| j.to_string()).collect(),
            counts,
            n: x.len().min(y.len()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn count(&self, row: usize, col: usize) -> usize {
        self.counts[row * self.col_labels.len() + col]
    }

    pub fn row_marginals(&self) -> Vec<usize> {
        let cols = self.col_labels.len();
        (0..self.row_labels.len())
            .map(|i| self.counts[i * cols..(i + 1) * cols].iter().sum())
            .collect()
    }

    pub fn col_marginals(&self) -> Vec<usize> {
        let cols = self.col_labels.len();
        let mut m = vec![0; cols];
        for (k, &c) in self.counts.iter().enumerate() {
            m[k % cols] += c;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let (rows, cols) = (self.row_labels.len(), self.col_labels.len());
        let mut counts = vec![0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                counts[j * rows + i] = self.counts[i * cols + j];
            }
        }
        Self {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            counts,
            n: self.n,
        }
    }

    fn entropies(&self) -> Result<(f64, f64, f64)> {
        if self.n == 0 {
            return Err(Error::ZeroCounts);
        }
        let hx = entropy_of(self.row_marginals().into_iter(), self.n);
        let hy = entropy_of(self.col_marginals().into_iter(), self.n);
        let hxy = entropy_of(self.counts.iter().copied(), self.n);
        Ok((hx, hy, hxy))
    }
}

/// `I(X; Y) = H(X) + H(Y) - H(X, Y)`, clamped to its bounds `[0, min(H(X), H(Y))]`.
pub fn mutual_information(table: &ContingencyTable) -> Result<f64> {
    let (hx, hy, hxy) = table.entropies()?;
    Ok((hx + hy - hxy).clamp(0.0, hx.min(hy)))
}

/// `I(X; Y) / min(H(X), H(Y))`. Undefined when either marginal is constant.
pub fn normalized_mi(table: &ContingencyTable) -> Result<f64> {
    let (hx, hy, hxy) = table.entropies()?;
    let floor = hx.min(hy);
    if floor <= 0.0 {
        return Err(Error::UndefinedRho);
    }
    let mi = (hx + hy - hxy).clamp(0.0, floor);
    Ok((mi / floor).clamp(0.0, 1.0))
}

/// Maps arbitrary values to dense codes in first-appearance order.
fn encode_values<T: Eq + Hash>(values: &[T]) -> (Vec<usize>, usize) {
    let mut index: HashMap<&T, usize> = HashMap::new();
    let codes = values
        .iter()
        .map(|v| {
            let next = index.len();
            *index.entry(v).or_insert(next)
        })
        .collect();
    (codes, index.len())
}

/// Draw number `draw` of the permutation test: a uniform random permutation
/// of `x` taken from the stream `(seed, draw)`.
pub fn permutation_draw<T: Clone>(x: &[T], seed: u64, draw: u64) -> Vec<T> {
    let mut out = x.to_vec();
    out.shuffle(&mut stream_rng(seed, draw));
    out
}

/// Result of [`permutation_significance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOutcome {
    pub observed_mi: f64,
    /// Observed MI strictly exceeds the MI of every permutation.
    pub significant: bool,
    /// `(1 + #{permuted >= observed}) / (1 + n_perm)`.
    pub p_value: f64,
    pub null_max: f64,
}

/// Permutation test of the mutual information between aligned sequences.
///
/// `x` is permuted `n_perm` times with `y` held fixed. Permutation `k` uses
/// the random stream `(seed, k)`, so the verdict is reproducible for a seed.
/// A constant `x` or `y` carries no information and is reported as not
/// significant with `p_value = 1`.
pub fn permutation_significance<T, U>(
    x: &[T],
    y: &[U],
    n_perm: usize,
    seed: u64,
) -> Result<PermutationOutcome>
where
    T: Eq + Hash,
    U: Eq + Hash,
{
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "permutation test needs at least 2 paired observations".into(),
        ));
    }
    if n_perm == 0 {
        return Err(Error::InvalidArgument("n_perm must be at least 1".into()));
    }
    let (xc, nx) = encode_values(x);
    let (yc, ny) = encode_values(y);
    Ok(permutation_test_codes(&xc, nx, &yc, ny, n_perm, seed))
}

fn permutation_test_codes(
    x: &[usize],
    nx: usize,
    y: &[usize],
    ny: usize,
    n_perm: usize,
    seed: u64,
) -> PermutationOutcome {
    let mi = |xs: &[usize]| {
        mutual_information(&ContingencyTable::from_codes(xs, y, nx, ny))
            .expect("non-empty table")
    };
    let observed_mi = mi(x);
    if nx < 2 || ny < 2 {
        return PermutationOutcome {
            observed_mi,
            significant: false,
            p_value: 1.0,
            null_max: observed_mi,
        };
    }
    let mut null_max = f64::NEG_INFINITY;
    let mut at_least = 0usize;
    for draw in 0..n_perm as u64 {
        let permuted = permutation_draw(x, seed, draw);
        let value = mi(&permuted);
        null_max = null_max.max(value);
        if value >= observed_mi {
            at_least += 1;
        }
    }
    PermutationOutcome {
        observed_mi,
        significant: observed_mi > null_max,
        p_value: (1 + at_least) as f64 / (1 + n_perm) as f64,
        null_max,
    }
}

/// One row of a feature ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub name: String,
    /// Objects on which both the feature and the target are defined.
    pub defined_count: usize,
    pub mi: f64,
    /// `None` when a marginal over the defined pairs is constant.
    pub rho: Option<f64>,
    pub p_value: f64,
    pub significant: bool,
    pub retained: bool,
}

/// Full ranking table, sorted by `rho` descending (undefined last), then by
/// defined count descending, then by name.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub target: String,
    pub n_perm: usize,
    pub features: Vec<RankedFeature>,
}

impl Ranking {
    pub fn significant(&self) -> impl Iterator<Item = &RankedFeature> {
        self.features.iter().filter(|f| f.significant)
    }

    pub fn retained(&self) -> impl Iterator<Item = &RankedFeature> {
        self.features.iter().filter(|f| f.retained)
    }

    /// Columns: feature, defined_count, mi_bits, rho, p_value, significant, retained.
    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("feature\tdefined_count\tmi_bits\trho\tp_value\tsignificant\tretained\n");
        for f in &self.features {
            let rho = f.rho.map_or_else(|| "undefined".to_string(), |r| format!("{r:.6}"));
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{}\t{:.6}\t{}\t{}\n",
                f.name, f.defined_count, f.mi, rho, f.p_value, f.significant, f.retained
            ));
        }
        out
    }
}

/// Ranks every feature other than `target` against it.
///
/// `target` names the label column or a feature. Each feature is scored on
/// the objects where it and the target are both defined and tested with
/// `n_perm` permutations drawn from a stream derived from `seed` and the
/// feature's schema position. Of the `m` significant features, the
/// `ceil(m / 2)` highest by `rho` are marked retained.
pub fn rank_features(corpus: &Corpus, target: &str, n_perm: usize, seed: u64) -> Result<Ranking> {
    if n_perm == 0 {
        return Err(Error::InvalidArgument("n_perm must be at least 1".into()));
    }
    let target_feature = corpus.feature_index(target);
    let target_codes: Vec<Option<usize>> = if target == corpus.label_column() {
        corpus.records().iter().map(|r| r.label).collect()
    } else if let Some(f) = target_feature {
        corpus.records().iter().map(|r| r.values[f]).collect()
    } else {
        return Err(Error::UnknownColumn(target.to_string()));
    };
    if target_codes.iter().all(Option::is_none) {
        return Err(Error::TargetAllMissing(target.to_string()));
    }

    let candidates: Vec<usize> = (0..corpus.schema().len())
        .filter(|&f| Some(f) != target_feature)
        .collect();

    let mut features: Vec<RankedFeature> = candidates
        .par_iter()
        .map(|&f| {
            let (xs, ys): (Vec<usize>, Vec<usize>) = corpus
                .records()
                .iter()
                .zip(&target_codes)
                .filter_map(|(r, t)| Some((r.values[f]?, (*t)?)))
                .unzip();
            score_feature(&corpus.schema()[f].name, &xs, &ys, n_perm, derive_seed(seed, f as u64))
        })
        .collect();

    features.sort_by(|a, b| {
        let by_rho = match (a.rho, b.rho) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        by_rho
            .then(b.defined_count.cmp(&a.defined_count))
            .then_with(|| a.name.cmp(&b.name))
    });
    let m = features.iter().filter(|f| f.significant).count();
    let keep = m.div_ceil(2);
    for f in features.iter_mut().filter(|f| f.significant).take(keep) {
        f.retained = true;
    }

    Ok(Ranking {
        target: target.to_string(),
        n_perm,
        features,
    })
}

fn score_feature(name: &str, xs: &[usize], ys: &[usize], n_perm: usize, seed: u64) -> RankedFeature {
    let mut row = RankedFeature {
        name: name.to_string(),
        defined_count: xs.len(),
        mi: 0.0,
        rho: None,
        p_value: 1.0,
        significant: false,
        retained: false,
    };
    if xs.is_empty() {
        return row;
    }
    let (xc, nx) = encode_values(xs);
    let (yc, ny) = encode_values(ys);
    let table = ContingencyTable::from_codes(&xc, &yc, nx, ny);
    row.mi = mutual_information(&table).expect("non-empty table");
    row.rho = normalized_mi(&table).ok();
    if xs.len() >= 2 {
        let outcome = permutation_test_codes(&xc, nx, &yc, ny, n_perm, seed);
        row.p_value = outcome.p_value;
        row.significant = outcome.significant;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[5, 5]).unwrap(), 1.0);
        assert_eq!(entropy(&[7]).unwrap(), 0.0);
        // -(3/4 log2 3/4 + 1/4 log2 1/4)
        assert!(close(entropy(&[3, 1]).unwrap(), 0.811278, 1e-6));
        assert!(close(entropy(&[3, 0, 1]).unwrap(), 0.811278, 1e-6));
        assert!(matches!(entropy(&[0, 0]), Err(Error::ZeroCounts)));
        assert!(matches!(entropy(&[]), Err(Error::ZeroCounts)));
    }

    #[test]
    fn mutual_information_examples() {
        let t = ContingencyTable::from_counts(vec![vec![4, 0], vec![0, 4]]).unwrap();
        assert!(close(mutual_information(&t).unwrap(), 1.0, 1e-12));
        assert!(close(normalized_mi(&t).unwrap(), 1.0, 1e-12));
        let t = ContingencyTable::from_counts(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(mutual_information(&t).unwrap(), 0.0);
        assert_eq!(normalized_mi(&t).unwrap(), 0.0);
        // 2 * (3/8 log2(3/2) + 1/8 log2(1/2))
        let t = ContingencyTable::from_counts(vec![vec![3, 1], vec![1, 3]]).unwrap();
        assert!(close(mutual_information(&t).unwrap(), 0.188722, 1e-6));
        assert!(close(normalized_mi(&t).unwrap(), 0.188722, 1e-6));
    }

    #[test]
    fn rho_undefined_for_constant_marginal() {
        let t = ContingencyTable::from_counts(vec![vec![3, 2]]).unwrap();
        assert!(matches!(normalized_mi(&t), Err(Error::UndefinedRho)));
        assert_eq!(mutual_information(&t).unwrap(), 0.0);
        let empty = ContingencyTable::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(mutual_information(&empty).is_err());
    }

    #[test]
    fn ragged_table_rejected() {
        assert!(ContingencyTable::from_counts(vec![vec![1, 2], vec![3]]).is_err());
    }

    #[test]
    fn constant_x_not_significant() {
        let x = vec!["a"; 20];
        let y: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let out = permutation_significance(&x, &y, 100, 1).unwrap();
        assert!(!out.significant);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn relabeled_target_is_significant() {
        let y: Vec<usize> = (0..40).map(|i| i % 3).collect();
        let x: Vec<&str> = y.iter().map(|&c| ["p", "q", "r"][c]).collect();
        let out = permutation_significance(&x, &y, 1000, 9).unwrap();
        assert!(out.significant);
        assert!(out.observed_mi > out.null_max);
        assert!(close(out.p_value, 1.0 / 1001.0, 1e-15));
    }

    #[test]
    fn permutation_preconditions() {
        assert!(permutation_significance(&[1, 2], &[1], 10, 0).is_err());
        assert!(permutation_significance(&[1], &[1], 10, 0).is_err());
        assert!(permutation_significance(&[1, 2], &[1, 2], 0, 0).is_err());
    }

    #[test]
    fn draws_preserve_multiset() {
        let x = vec![1, 1, 2, 3, 3, 3];
        for d in 0..20 {
            let mut p = permutation_draw(&x, 5, d);
            p.sort();
            assert_eq!(p, x);
        }
        assert_eq!(permutation_draw(&x, 5, 2), permutation_draw(&x, 5, 2));
    }
}
