//! Resampled error estimates and outlier detection.
//!
//! [`cross_validate`] repeats stratified k-fold cross-validation and reports
//! held-out accuracy. [`per_object_error`] trains one classifier per trial on
//! an independent stratified holdout split and records, for every object, how
//! often it was misclassified when held out; [`outlier_report`] lists the
//! objects whose rate crosses a threshold together with the label they were
//! most often given instead. Each repeat or trial draws its randomness from
//! `(seed, index)`, so results do not depend on thread scheduling.

use std::fmt;

use rayon::prelude::*;

use crate::bayes::{nb_fit_rows, nb_posterior, NaiveBayesModel, DEFAULT_SMOOTHING};
use crate::corpus::{one_hot_encode, stratified_folds, stratified_holdout, Corpus, DesignMatrix};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::svm::{train_on_rows, SvmModel, DEFAULT_C, DEFAULT_TOL};

pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.1;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Learner {
    Svm { c: f64, tol: f64 },
    NaiveBayes { smoothing: f64 },
}

impl Learner {
    pub fn svm() -> Self {
        Self::Svm {
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
        }
    }

    pub fn naive_bayes() -> Self {
        Self::NaiveBayes {
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Svm { c, tol } => write!(f, "svm(C={c},tol={tol})"),
            Self::NaiveBayes { smoothing } => write!(f, "nb(smoothing={smoothing})"),
        }
    }
}

enum Trained {
    Svm(SvmModel),
    Nb(NaiveBayesModel),
}

/// A corpus with its encoding computed once for all trials.
struct Workspace<'a> {
    corpus: &'a Corpus,
    matrix: Option<DesignMatrix>,
}

impl<'a> Workspace<'a> {
    fn new(corpus: &'a Corpus, learner: Learner) -> Self {
        let matrix = matches!(learner, Learner::Svm { .. }).then(|| one_hot_encode(corpus));
        Self { corpus, matrix }
    }

    fn fit(&self, learner: Learner, rows: &[usize]) -> Result<Trained> {
        match learner {
            Learner::Svm { c, tol } => {
                let matrix = self.matrix.as_ref().expect("encoded for svm");
                Ok(Trained::Svm(train_on_rows(matrix, rows, c, tol)?))
            }
            Learner::NaiveBayes { smoothing } => {
                Ok(Trained::Nb(nb_fit_rows(self.corpus, rows, smoothing)?))
            }
        }
    }

    /// Predicted class and per-class scores (votes or posterior) for a record.
    fn predict(&self, model: &Trained, record: usize) -> Result<(usize, Vec<f64>)> {
        match model {
            Trained::Svm(m) => {
                let x = &self.matrix.as_ref().expect("encoded for svm").rows[record];
                let p = m.predict(x)?;
                Ok((p.class, p.votes.iter().map(|&v| v as f64).collect()))
            }
            Trained::Nb(m) => {
                let post = nb_posterior(m, &self.corpus.records()[record])?;
                let best = argmax(&post);
                Ok((best, post))
            }
        }
    }
}

/// First index of the maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub learner: Learner,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    /// `fold_accuracies[repeat][fold]`.
    pub fold_accuracies: Vec<Vec<f64>>,
    /// Mean of all fold accuracies.
    pub mean_accuracy: f64,
    pub test_loss: f64,
    pub class_names: Vec<String>,
    /// `confusion[true][predicted]`, summed over every held-out prediction.
    pub confusion: Vec<Vec<usize>>,
}

impl CvReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key\tvalue\n");
        out.push_str(&format!("learner\t{}\n", self.learner));
        out.push_str(&format!("k\t{}\n", self.k));
        out.push_str(&format!("repeats\t{}\n", self.repeats));
        out.push_str(&format!("seed\t{}\n", self.seed));
        out.push_str(&format!("mean_accuracy\t{:.6}\n", self.mean_accuracy));
        out.push_str(&format!("test_loss\t{:.6}\n", self.test_loss));
        out.push_str("\nrepeat\tfold\taccuracy\n");
        for (r, folds) in self.fold_accuracies.iter().enumerate() {
            for (f, acc) in folds.iter().enumerate() {
                out.push_str(&format!("{r}\t{f}\t{acc:.6}\n"));
            }
        }
        out.push_str("\ntrue\\predicted");
        for name in &self.class_names {
            out.push_str(&format!("\t{name}"));
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            out.push_str(name);
            for n in row {
                out.push_str(&format!("\t{n}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Repeated stratified k-fold cross-validation on the labeled records.
pub fn cross_validate(
    corpus: &Corpus,
    learner: Learner,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let folds: Vec<Vec<Vec<usize>>> = (0..repeats)
        .map(|r| stratified_folds(corpus, k, derive_seed(seed, r as u64)))
        .collect::<Result<_>>()?;
    let ws = Workspace::new(corpus, learner);

    let tasks: Vec<(usize, usize)> = (0..repeats)
        .flat_map(|r| (0..k).map(move |f| (r, f)))
        .collect();
    let outcomes: Vec<Vec<(usize, usize)>> = tasks
        .par_iter()
        .map(|&(r, f)| {
            let test = &folds[r][f];
            let mut train: Vec<usize> = folds[r]
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            train.sort_unstable();
            debug_assert!(test.iter().all(|i| train.binary_search(i).is_err()));
            let wrap = |e| Error::Fold {
                repeat: r,
                fold: f,
                source: Box::new(e),
            };
            let model = ws.fit(learner, &train).map_err(wrap)?;
            test.iter()
                .map(|&i| Ok((i, ws.predict(&model, i).map_err(wrap)?.0)))
                .collect()
        })
        .collect::<Result<_>>()?;

    let n_classes = corpus.label_set().len();
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    let mut fold_accuracies = vec![Vec::with_capacity(k); repeats];
    for (&(r, _), predictions) in tasks.iter().zip(&outcomes) {
        let mut correct = 0;
        for &(i, pred) in predictions {
            let truth = corpus.records()[i].label.expect("labeled");
            confusion[truth][pred] += 1;
            correct += usize::from(truth == pred);
        }
        fold_accuracies[r].push(correct as f64 / predictions.len() as f64);
    }
    let all: Vec<f64> = fold_accuracies.iter().flatten().copied().collect();
    let mean_accuracy = all.iter().sum::<f64>() / all.len() as f64;

    Ok(CvReport {
        learner,
        k,
        repeats,
        seed,
        fold_accuracies,
        mean_accuracy,
        test_loss: 1.0 - mean_accuracy,
        class_names: corpus.label_set().to_vec(),
        confusion,
    })
}

/// Resampling history of one labeled object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRate {
    pub id: String,
    pub record: usize,
    pub true_label: usize,
    pub trials_tested: usize,
    pub errors: usize,
    /// `errors / trials_tested`; `None` when the object was never held out.
    pub rate: Option<f64>,
    /// How often each class was predicted for the object.
    pub predicted_counts: Vec<usize>,
}

impl ObjectRate {
    /// Most frequent prediction and its count; ties go to the earlier class.
    pub fn modal_prediction(&self) -> Option<(usize, usize)> {
        modal(self.predicted_counts.iter().copied().enumerate())
    }

    /// Most frequent wrong prediction and its count.
    pub fn modal_wrong_prediction(&self) -> Option<(usize, usize)> {
        modal(
            self.predicted_counts
                .iter()
                .copied()
                .enumerate()
                .filter(|&(c, _)| c != self.true_label),
        )
    }
}

fn modal(counts: impl Iterator<Item = (usize, usize)>) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (c, n) in counts {
        if n > 0 && best.map_or(true, |(_, m)| n > m) {
            best = Some((c, n));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub trials: usize,
    pub class_names: Vec<String>,
    /// Tested objects by rate descending then record order, followed by
    /// objects that were never held out.
    pub rows: Vec<ObjectRate>,
}

impl RateTable {
    pub fn get(&self, id: &str) -> Option<&ObjectRate> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Columns: id, trials_tested, errors, rate, modal_predicted_label,
    /// modal_count, true_label. Untested objects show `NA`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "id\ttrials_tested\terrors\trate\tmodal_predicted_label\tmodal_count\ttrue_label\n",
        );
        for r in &self.rows {
            let rate = r.rate.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
            let (modal_label, modal_count) = match r.modal_prediction() {
                Some((c, n)) => (self.class_names[c].as_str(), n),
                None => ("NA", 0),
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.id,
                r.trials_tested,
                r.errors,
                rate,
                modal_label,
                modal_count,
                self.class_names[r.true_label]
            ));
        }
        out
    }
}

/// Per-object misclassification rates over `trials` stratified holdout splits.
pub fn per_object_error(
    corpus: &Corpus,
    learner: Learner,
    trials: usize,
    holdout_fraction: f64,
    seed: u64,
) -> Result<RateTable> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..trials)
        .map(|t| stratified_holdout(corpus, holdout_fraction, derive_seed(seed, t as u64)))
        .collect::<Result<_>>()?;
    let ws = Workspace::new(corpus, learner);

    let outcomes: Vec<Vec<(usize, usize)>> = splits
        .par_iter()
        .enumerate()
        .map(|(t, (train, test))| {
            let wrap = |e| Error::Trial {
                trial: t,
                source: Box::new(e),
            };
            let model = ws.fit(learner, train).map_err(wrap)?;
            test.iter()
                .map(|&i| Ok((i, ws.predict(&model, i).map_err(wrap)?.0)))
                .collect()
        })
        .collect::<Result<_>>()?;

    let n_classes = corpus.label_set().len();
    let mut rows: Vec<ObjectRate> = corpus
        .labeled_indices()
        .into_iter()
        .map(|i| {
            let r = &corpus.records()[i];
            ObjectRate {
                id: r.id.clone(),
                record: i,
                true_label: r.label.expect("labeled"),
                trials_tested: 0,
                errors: 0,
                rate: None,
                predicted_counts: vec![0; n_classes],
            }
        })
        .collect();
    let mut slot = vec![usize::MAX; corpus.len()];
    for (k, row) in rows.iter().enumerate() {
        slot[row.record] = k;
    }
    for predictions in &outcomes {
        for &(i, pred) in predictions {
            let row = &mut rows[slot[i]];
            row.trials_tested += 1;
            row.errors += usize::from(pred != row.true_label);
            row.predicted_counts[pred] += 1;
        }
    }
    for row in &mut rows {
        if row.trials_tested > 0 {
            row.rate = Some(row.errors as f64 / row.trials_tested as f64);
        }
    }
    rows.sort_by(|a, b| match (a.rate, b.rate) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.record.cmp(&b.record)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.record.cmp(&b.record),
    });

    Ok(RateTable {
        trials,
        class_names: corpus.label_set().to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outlier {
    pub id: String,
    pub true_label: String,
    pub rate: f64,
    pub errors: usize,
    pub trials_tested: usize,
    /// Most frequent wrong label and how often it was assigned.
    pub modal_wrong: Option<(String, usize)>,
}

impl fmt::Display for Outlier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.modal_wrong {
            Some((label, n)) => write!(
                f,
                "{} (labeled {}) classified as {} in {} of {} trials, error rate {:.1}%",
                self.id,
                self.true_label,
                label,
                n,
                self.trials_tested,
                100.0 * self.rate
            ),
            None => write!(
                f,
                "{} (labeled {}) never misclassified in {} trials",
                self.id, self.true_label, self.trials_tested
            ),
        }
    }
}

/// Tested objects with `rate >= threshold`, highest rate first.
pub fn outlier_report(rates: &RateTable, threshold: f64) -> Result<Vec<Outlier>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    Ok(rates
        .rows
        .iter()
        .filter_map(|r| {
            let rate = r.rate?;
            (rate >= threshold).then(|| Outlier {
                id: r.id.clone(),
                true_label: rates.class_names[r.true_label].clone(),
                rate,
                errors: r.errors,
                trials_tested: r.trials_tested,
                modal_wrong: r
                    .modal_wrong_prediction()
                    .map(|(c, n)| (rates.class_names[c].clone(), n)),
            })
        })
        .collect())
}

/// Columns: id, true_label, rate, errors, trials_tested, modal_wrong_label, modal_wrong_count.
pub fn outliers_tsv(outliers: &[Outlier]) -> String {
    let mut out = String::from(
        "id\ttrue_label\trate\terrors\ttrials_tested\tmodal_wrong_label\tmodal_wrong_count\n",
    );
    for o in outliers {
        let (label, count) = o
            .modal_wrong
            .as_ref()
            .map_or(("NA", 0), |(l, n)| (l.as_str(), *n));
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\n",
            o.id, o.true_label, o.rate, o.errors, o.trials_tested, label, count
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledPrediction {
    pub id: String,
    pub predicted: String,
    /// Votes per class for the SVM, posterior per class for Naive Bayes.
    pub scores: Vec<f64>,
}

/// Trains once on every labeled record and classifies each unlabeled one.
pub fn classify_unlabeled(corpus: &Corpus, learner: Learner) -> Result<Vec<UnlabeledPrediction>> {
    let unlabeled = corpus.unlabeled_indices();
    if unlabeled.is_empty() {
        return Ok(Vec::new());
    }
    let ws = Workspace::new(corpus, learner);
    let model = ws.fit(learner, &corpus.labeled_indices())?;
    unlabeled
        .into_iter()
        .map(|i| {
            let (class, scores) = ws.predict(&model, i)?;
            Ok(UnlabeledPrediction {
                id: corpus.records()[i].id.clone(),
                predicted: corpus.label_set()[class].clone(),
                scores,
            })
        })
        .collect()
}

/// Columns: id, predicted, then one score column per class.
pub fn classification_tsv(class_names: &[String], predictions: &[UnlabeledPrediction]) -> String {
    let mut out = String::from("id\tpredicted");
    for c in class_names {
        out.push_str(&format!("\tscore:{c}"));
    }
    out.push('\n');
    for p in predictions {
        out.push_str(&format!("{}\t{}", p.id, p.predicted));
        for s in &p.scores {
            out.push_str(&format!("\t{s:.6}"));
        }
        out.push('\n');
    }
    out
}
