//! Categorical Naive Bayes with missing cells, and nomograms built from it.
//!
//! Conditional tables use add-`s` smoothing,
//! `P(v | c) = (n_cv + s) / (n_c + s |V|)`, where `n_c` counts the class-`c`
//! records on which the feature is defined. Missing cells are skipped both when
//! fitting and when scoring.

mod nomogram;

pub use nomogram::{
    build_nomogram, nomogram_score, render_nomogram, Nomogram, NomogramFeature, NomogramScore,
    RenderFormat, PROBABILITY_MARKS,
};

use crate::corpus::{Corpus, ObjectRecord};
use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub name: String,
    pub vocabulary: Vec<String>,
    /// `conditional[class][value] = P(value | class)`.
    pub conditional: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub class_names: Vec<String>,
    pub priors: Vec<f64>,
    pub features: Vec<FeatureTable>,
    pub smoothing: f64,
}

/// Fits on every labeled record.
pub fn nb_fit(corpus: &Corpus, smoothing: f64) -> Result<NaiveBayesModel> {
    nb_fit_rows(corpus, &corpus.labeled_indices(), smoothing)
}

/// Fits on the labeled records among `rows`. Classes of the corpus label set
/// that have no rows there still get smoothed, strictly positive tables.
pub fn nb_fit_rows(corpus: &Corpus, rows: &[usize], smoothing: f64) -> Result<NaiveBayesModel> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "smoothing must be positive, got {smoothing}"
        )));
    }
    let k = corpus.label_set().len();
    if k < 2 {
        return Err(if k == 0 { Error::NoLabeledRecords } else { Error::SingleClass });
    }
    let labeled: Vec<&ObjectRecord> = rows
        .iter()
        .map(|&i| &corpus.records()[i])
        .filter(|r| r.label.is_some())
        .collect();
    if labeled.is_empty() {
        return Err(Error::NoLabeledRecords);
    }

    let mut class_counts = vec![0usize; k];
    for r in &labeled {
        class_counts[r.label.unwrap()] += 1;
    }
    let n = labeled.len() as f64;
    let priors = class_counts
        .iter()
        .map(|&c| (c as f64 + smoothing) / (n + smoothing * k as f64))
        .collect();

    let features = corpus
        .schema()
        .iter()
        .enumerate()
        .map(|(f, schema)| {
            let v = schema.vocabulary.len();
            let mut counts = vec![vec![0usize; v]; k];
            for r in &labeled {
                if let Some(value) = r.values[f] {
                    counts[r.label.unwrap()][value] += 1;
                }
            }
            let conditional = counts
                .into_iter()
                .map(|row| {
                    let defined: usize = row.iter().sum();
                    let denom = defined as f64 + smoothing * v as f64;
                    row.into_iter()
                        .map(|c| (c as f64 + smoothing) / denom)
                        .collect()
                })
                .collect();
            FeatureTable {
                name: schema.name.clone(),
                vocabulary: schema.vocabulary.clone(),
                conditional,
            }
        })
        .collect();

    Ok(NaiveBayesModel {
        class_names: corpus.label_set().to_vec(),
        priors,
        features,
        smoothing,
    })
}

impl NaiveBayesModel {
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    fn check_record(&self, record: &ObjectRecord) -> Result<()> {
        if record.values.len() != self.features.len() {
            return Err(Error::DimensionMismatch {
                expected: self.features.len(),
                found: record.values.len(),
            });
        }
        for (table, value) in self.features.iter().zip(&record.values) {
            if let Some(v) = *value {
                if v >= table.vocabulary.len() {
                    return Err(Error::InvalidRecord(format!(
                        "value index {v} out of range for `{}`",
                        table.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// `ln P(c) + sum over defined features of ln P(value | c)`, per class.
    pub fn log_joint(&self, record: &ObjectRecord) -> Result<Vec<f64>> {
        self.check_record(record)?;
        Ok((0..self.class_names.len())
            .map(|c| {
                let mut score = self.priors[c].ln();
                for (table, value) in self.features.iter().zip(&record.values) {
                    if let Some(v) = *value {
                        score += table.conditional[c][v].ln();
                    }
                }
                score
            })
            .collect())
    }

    /// Two-class model `target` versus the prior-weighted mixture of the other classes.
    pub fn binarize(&self, target: &str) -> Result<NaiveBayesModel> {
        let t = self
            .class_index(target)
            .ok_or_else(|| Error::UnknownClass(target.to_string()))?;
        let others: Vec<usize> = (0..self.class_names.len()).filter(|&c| c != t).collect();
        let rest_prior: f64 = others.iter().map(|&c| self.priors[c]).sum();
        let features = self
            .features
            .iter()
            .map(|table| {
                let rest = (0..table.vocabulary.len())
                    .map(|v| {
                        others
                            .iter()
                            .map(|&c| self.priors[c] * table.conditional[c][v])
                            .sum::<f64>()
                            / rest_prior
                    })
                    .collect();
                FeatureTable {
                    name: table.name.clone(),
                    vocabulary: table.vocabulary.clone(),
                    conditional: vec![table.conditional[t].clone(), rest],
                }
            })
            .collect();
        Ok(NaiveBayesModel {
            class_names: vec![target.to_string(), format!("not {target}")],
            priors: vec![self.priors[t], rest_prior],
            features,
            smoothing: self.smoothing,
        })
    }
}

/// Normalized class posterior, computed in log space.
pub fn nb_posterior(model: &NaiveBayesModel, record: &ObjectRecord) -> Result<Vec<f64>> {
    let scores = model.log_joint(record)?;
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    Ok(exp.into_iter().map(|e| e / z).collect())
}
