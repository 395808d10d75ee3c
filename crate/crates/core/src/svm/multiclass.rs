use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::{dot, smo_train_binary, BinaryProblem};
use crate::corpus::DesignMatrix;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Linear,
}

/// A training row with a nonzero multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub alpha: f64,
    pub target: f64,
    pub row: Vec<f64>,
}

/// The binary machine for one unordered class pair. `positive` is the class
/// trained with target `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMachine {
    pub positive: usize,
    pub negative: usize,
    pub b: f64,
    pub support: Vec<SupportVector>,
}

impl PairMachine {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        let mut f = 0.0;
        for sv in &self.support {
            f += sv.alpha * sv.target * dot(&sv.row, x);
        }
        f + self.b
    }
}

/// One-vs-one ensemble of linear SVMs.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// All class names of the source corpus; predictions index into this.
    pub class_names: Vec<String>,
    /// Classes that had training rows, ascending.
    pub classes: Vec<usize>,
    pub machines: Vec<PairMachine>,
    pub column_map: Vec<(String, String)>,
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
}

/// Votes and summed margins behind a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmPrediction {
    pub class: usize,
    /// Per class in `class_names` order.
    pub votes: Vec<usize>,
    /// Sum of `|f(x)|` over the machines that voted for each class.
    pub margins: Vec<f64>,
}

/// Trains one machine per unordered pair of classes on all labeled rows.
/// Every class named in the matrix must have at least one labeled row.
pub fn train_multiclass(matrix: &DesignMatrix, c: f64, tol: f64) -> Result<SvmModel> {
    let mut counts = vec![0usize; matrix.class_names.len()];
    for l in matrix.labels.iter().flatten() {
        counts[*l] += 1;
    }
    if let Some(k) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(matrix.class_names[k].clone()));
    }
    let rows: Vec<usize> = (0..matrix.rows.len())
        .filter(|&i| matrix.labels[i].is_some())
        .collect();
    train_on_rows(matrix, &rows, c, tol)
}

/// Trains on the labeled rows listed in `rows`. Classes without rows among
/// them are left out of the vote; at least two classes must remain.
pub fn train_on_rows(matrix: &DesignMatrix, rows: &[usize], c: f64, tol: f64) -> Result<SvmModel> {
    let mut present = vec![false; matrix.class_names.len()];
    for &i in rows {
        if let Some(l) = matrix.labels[i] {
            present[l] = true;
        }
    }
    let classes: Vec<usize> = (0..present.len()).filter(|&k| present[k]).collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let pairs: Vec<(usize, usize)> = classes
        .iter()
        .enumerate()
        .flat_map(|(a, &p)| classes[a + 1..].iter().map(move |&q| (p, q)))
        .collect();

    let machines = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(pos, neg))| {
            let mut sub_rows = Vec::new();
            let mut targets = Vec::new();
            for &i in rows {
                match matrix.labels[i] {
                    Some(l) if l == pos => targets.push(1.0),
                    Some(l) if l == neg => targets.push(-1.0),
                    _ => continue,
                }
                sub_rows.push(matrix.rows[i].clone());
            }
            let problem =
                BinaryProblem::new(sub_rows, targets, c, tol)?.with_seed(derive_seed(0, k as u64));
            let solution = smo_train_binary(&problem)?;
            let support = problem
                .rows
                .into_iter()
                .zip(problem.targets)
                .zip(solution.alpha)
                .filter(|(_, a)| *a > 0.0)
                .map(|((row, target), alpha)| SupportVector { alpha, target, row })
                .collect();
            Ok(PairMachine {
                positive: pos,
                negative: neg,
                b: solution.b,
                support,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SvmModel {
        class_names: matrix.class_names.clone(),
        classes,
        machines,
        column_map: matrix.column_map.clone(),
        kernel: Kernel::Linear,
        c,
        tol,
    })
}

impl SvmModel {
    pub fn dimension(&self) -> usize {
        self.column_map.len()
    }

    /// Majority vote over the pair machines. A machine votes for its positive
    /// class when `f(x) >= 0`. Ties go to the tied class with the larger sum
    /// of `|f(x)|` over the votes it received, then to the earlier class.
    pub fn predict(&self, x: &[f64]) -> Result<SvmPrediction> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: x.len(),
            });
        }
        let decisions: Vec<f64> = self.machines.iter().map(|m| m.decision_value(x)).collect();
        Ok(self.vote(&decisions))
    }

    /// Applies the voting rule to precomputed decision values, one per machine.
    pub fn vote(&self, decisions: &[f64]) -> SvmPrediction {
        let k = self.class_names.len();
        let mut votes = vec![0usize; k];
        let mut margins = vec![0.0; k];
        for (m, &f) in self.machines.iter().zip(decisions) {
            let winner = if f >= 0.0 { m.positive } else { m.negative };
            votes[winner] += 1;
            margins[winner] += f.abs();
        }
        let mut best = self.classes[0];
        for &cls in &self.classes[1..] {
            if votes[cls] > votes[best] || (votes[cls] == votes[best] && margins[cls] > margins[best])
            {
                best = cls;
            }
        }
        SvmPrediction {
            class: best,
            votes,
            margins,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{one_hot_encode, Corpus, RawRow};

    fn corpus(classes: &[&str], per_class: usize) -> Corpus {
        let mut rows = Vec::new();
        for (c, name) in classes.iter().enumerate() {
            for i in 0..per_class {
                rows.push(RawRow {
                    id: format!("{name}{i}"),
                    values: vec![Some(format!("v{c}")), Some(format!("w{}", i % 2))],
                    label: Some(name.to_string()),
                });
            }
        }
        Corpus::from_rows("id", "RSG", vec!["f".into(), "g".into()], rows).unwrap()
    }

    #[test]
    fn machine_count_is_pairs() {
        for (names, expected) in [
            (&["A", "B"][..], 1),
            (&["Phoenician", "North Syrian", "Intermediate"][..], 3),
            (&["A", "B", "C", "D"][..], 6),
        ] {
            let m = one_hot_encode(&corpus(names, 4));
            let model = train_multiclass(&m, 1.0, 1e-3).unwrap();
            assert_eq!(model.machines.len(), expected);
            for (i, row) in m.rows.iter().enumerate() {
                assert_eq!(model.predict(row).unwrap().class, m.labels[i].unwrap());
            }
        }
    }

    #[test]
    fn two_class_sign_picks_positive() {
        let m = one_hot_encode(&corpus(&["A", "B"], 3));
        let model = train_multiclass(&m, 1.0, 1e-3).unwrap();
        let a_row = &m.rows[0];
        assert!(model.machines[0].decision_value(a_row) > 0.0);
        assert_eq!(model.predict(a_row).unwrap().class, 0);
    }

    #[test]
    fn empty_class_rejected() {
        let mut m = one_hot_encode(&corpus(&["A", "B", "C"], 2));
        for l in m.labels.iter_mut() {
            if *l == Some(2) {
                *l = None;
            }
        }
        assert!(matches!(train_multiclass(&m, 1.0, 1e-3), Err(Error::EmptyClass(ref c)) if c == "C"));
        let only_a: Vec<usize> = vec![0, 1];
        assert!(matches!(train_on_rows(&m, &only_a, 1.0, 1e-3), Err(Error::SingleClass)));
    }

    fn three_class_shell() -> SvmModel {
        let machine = |positive, negative| PairMachine {
            positive,
            negative,
            b: 0.0,
            support: vec![],
        };
        SvmModel {
            class_names: vec!["A".into(), "B".into(), "C".into()],
            classes: vec![0, 1, 2],
            machines: vec![machine(0, 1), machine(0, 2), machine(1, 2)],
            column_map: vec![],
            kernel: Kernel::Linear,
            c: 1.0,
            tol: 1e-3,
        }
    }

    #[test]
    fn majority_vote() {
        let model = three_class_shell();
        // A beats B and C.
        let p = model.vote(&[0.3, 0.2, -5.0]);
        assert_eq!(p.class, 0);
        assert_eq!(p.votes, vec![2, 0, 1]);
    }

    #[test]
    fn cycle_resolved_by_margin() {
        let model = three_class_shell();
        // A > B (0.4), C > A (0.9), B > C (0.7): one vote each.
        let decisions = [0.4, -0.9, 0.7];
        let p = model.vote(&decisions);
        assert_eq!(p.votes, vec![1, 1, 1]);
        // Enumerate the rule by hand: margins A = 0.4, B = 0.7, C = 0.9.
        let expected = [(0usize, 0.4f64), (1, 0.7), (2, 0.9)]
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert_eq!(p.class, expected);
        assert_eq!(p.class, 2);
        // Exact tie in margin falls back to class order.
        assert_eq!(model.vote(&[0.5, -0.5, 0.5]).class, 0);
    }

    #[test]
    fn dimension_checked() {
        let model = train_multiclass(&one_hot_encode(&corpus(&["A", "B"], 2)), 1.0, 1e-3).unwrap();
        assert!(model.predict(&[1.0]).is_err());
    }
}
