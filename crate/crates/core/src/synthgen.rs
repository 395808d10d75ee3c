//! Ground-truth synthetic corpora.
//!
//! A [`GeneratorPlan`] fixes the number of objects and classes and, for each
//! feature, its vocabulary size, how many objects it is defined on, and how
//! its values depend on the class. Classes are assigned in balanced counts and
//! shuffled; each feature is then defined on an exact number of randomly
//! chosen objects. Feature values always follow the object's true class, while
//! label noise and planted outliers only change the observed label, so the
//! returned [`GroundTruth`] can be used as an oracle.
//!
//! Plans are plain TOML:
//!
//! ```toml
//! n_objects = 30
//! n_classes = 2
//! seed = 1
//!
//! [[features]]
//! name = "shape"
//! vocabulary_size = 3
//! defined_count = 20
//! kind = { type = "informative", strength = 0.8 }
//!
//! [[features]]
//! name = "finish"
//! vocabulary_size = 2
//! defined_fraction = 0.5
//! kind = { type = "noise" }
//! ```

use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RawRow};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const NORMALIZATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureKind {
    /// Uniform over the vocabulary regardless of class.
    Noise,
    /// Class `c` favours value `c mod V`: that value gets extra mass `strength`
    /// on top of a uniform `(1 - strength) / V`.
    Informative { strength: f64 },
    /// The value is the class name itself.
    ClassCopy,
    /// Explicit `distributions[class][value]`.
    Conditional { distributions: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// Ignored for `class_copy`, whose vocabulary is the class names.
    #[serde(default)]
    pub vocabulary_size: usize,
    /// Exact number of objects the feature is defined on.
    #[serde(default)]
    pub defined_count: Option<usize>,
    /// Used when `defined_count` is absent; rounded to the nearest count.
    #[serde(default)]
    pub defined_fraction: Option<f64>,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, vocabulary_size: usize, defined_count: usize, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            vocabulary_size,
            defined_count: Some(defined_count),
            defined_fraction: None,
            kind,
        }
    }

    pub fn is_informative(&self) -> bool {
        !matches!(self.kind, FeatureKind::Noise)
    }
}

fn default_n_objects() -> usize {
    210
}

fn default_n_classes() -> usize {
    3
}

fn default_id_column() -> String {
    "id".into()
}

fn default_label_column() -> String {
    "RSG".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorPlan {
    #[serde(default = "default_n_objects")]
    pub n_objects: usize,
    #[serde(default = "default_n_classes")]
    pub n_classes: usize,
    /// Defaults to `C0, C1, ...`.
    #[serde(default)]
    pub class_names: Option<Vec<String>>,
    #[serde(default = "default_id_column")]
    pub id_column: String,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    pub features: Vec<FeatureSpec>,
    /// Probability that a labeled object's label is replaced by a random other class.
    #[serde(default)]
    pub label_noise: f64,
    /// Number of labeled objects whose label is deliberately flipped.
    #[serde(default)]
    pub planted_outliers: usize,
    /// Number of objects left without a label.
    #[serde(default)]
    pub n_unlabeled: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Generator bookkeeping for oracle-based checks.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub class_names: Vec<String>,
    pub ids: Vec<String>,
    /// Generating class per object, as an index into `class_names`.
    pub true_classes: Vec<usize>,
    /// Label written to the corpus, `None` for unlabeled objects.
    pub observed: Vec<Option<usize>>,
    /// `(feature name, informative)` in schema order.
    pub informative: Vec<(String, bool)>,
    pub outlier_ids: Vec<String>,
    /// Objects relabeled by label noise (outliers excluded).
    pub noisy_ids: Vec<String>,
}

impl GroundTruth {
    pub fn true_class_of(&self, id: &str) -> Option<&str> {
        let i = self.ids.iter().position(|x| x == id)?;
        Some(&self.class_names[self.true_classes[i]])
    }

    /// Columns: id, true_class, observed_label, planted_outlier, label_noise.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\ttrue_class\tobserved_label\tplanted_outlier\tlabel_noise\n");
        for (i, id) in self.ids.iter().enumerate() {
            let observed = self.observed[i].map_or("?", |c| self.class_names[c].as_str());
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                id,
                self.class_names[self.true_classes[i]],
                observed,
                self.outlier_ids.contains(id),
                self.noisy_ids.contains(id)
            ));
        }
        out
    }

    /// Columns: feature, informative.
    pub fn features_tsv(&self) -> String {
        let mut out = String::from("feature\tinformative\n");
        for (name, informative) in &self.informative {
            out.push_str(&format!("{name}\t{informative}\n"));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub corpus: Corpus,
    pub truth: GroundTruth,
}

impl GeneratorPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn class_names(&self) -> Vec<String> {
        self.class_names
            .clone()
            .unwrap_or_else(|| (0..self.n_classes).map(|c| format!("C{c}")).collect())
    }

    fn defined_count(&self, spec: &FeatureSpec) -> Result<usize> {
        match (spec.defined_count, spec.defined_fraction) {
            (Some(n), _) if n <= self.n_objects => Ok(n),
            (Some(n), _) => Err(infeasible(format!(
                "`{}` defined on {n} objects but the plan has {}",
                spec.name, self.n_objects
            ))),
            (None, Some(f)) if (0.0..=1.0).contains(&f) => {
                Ok((f * self.n_objects as f64).round() as usize)
            }
            (None, Some(f)) => Err(infeasible(format!(
                "`{}` defined_fraction {f} outside [0, 1]",
                spec.name
            ))),
            (None, None) => Ok(self.n_objects),
        }
    }

    /// `P(value | class)` for one feature, `[class][value]`.
    fn distributions(&self, spec: &FeatureSpec) -> Result<Vec<Vec<f64>>> {
        let k = self.n_classes;
        let v = spec.vocabulary_size;
        match &spec.kind {
            FeatureKind::Noise => {
                if v == 0 {
                    return Err(infeasible(format!("`{}` has an empty vocabulary", spec.name)));
                }
                Ok(vec![vec![1.0 / v as f64; v]; k])
            }
            FeatureKind::Informative { strength } => {
                if v < 2 {
                    return Err(infeasible(format!(
                        "informative `{}` needs at least two values",
                        spec.name
                    )));
                }
                if !(0.0..=1.0).contains(strength) {
                    return Err(infeasible(format!(
                        "`{}` strength {strength} outside [0, 1]",
                        spec.name
                    )));
                }
                Ok((0..k)
                    .map(|c| {
                        (0..v)
                            .map(|x| (1.0 - strength) / v as f64 + if x == c % v { *strength } else { 0.0 })
                            .collect()
                    })
                    .collect())
            }
            FeatureKind::ClassCopy => Ok((0..k)
                .map(|c| (0..k).map(|x| if x == c { 1.0 } else { 0.0 }).collect())
                .collect()),
            FeatureKind::Conditional { distributions } => {
                if distributions.len() != k {
                    return Err(infeasible(format!(
                        "`{}` has {} class distributions, expected {k}",
                        spec.name,
                        distributions.len()
                    )));
                }
                for row in distributions {
                    if row.len() != v || v == 0 {
                        return Err(infeasible(format!(
                            "`{}` distribution has {} values, expected {v}",
                            spec.name,
                            row.len()
                        )));
                    }
                    if row.iter().any(|p| !(0.0..=1.0).contains(p))
                        || (row.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_SLACK
                    {
                        return Err(infeasible(format!(
                            "`{}` distribution is not normalized",
                            spec.name
                        )));
                    }
                }
                Ok(distributions.clone())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(infeasible("at least two classes are required".into()));
        }
        if self.class_names().len() != self.n_classes {
            return Err(infeasible("class_names does not match n_classes".into()));
        }
        let labeled = self.n_objects.saturating_sub(self.n_unlabeled);
        if labeled < self.n_classes {
            return Err(infeasible(format!(
                "{labeled} labeled objects cannot cover {} classes",
                self.n_classes
            )));
        }
        if self.planted_outliers > labeled {
            return Err(infeasible("more planted outliers than labeled objects".into()));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(infeasible(format!("label_noise {} outside [0, 1]", self.label_noise)));
        }
        let mut names = std::collections::HashSet::new();
        for spec in &self.features {
            if !names.insert(spec.name.as_str()) {
                return Err(Error::DuplicateColumn(spec.name.clone()));
            }
            if spec.is_informative() && self.defined_count(spec)? == 0 {
                return Err(infeasible(format!(
                    "informative `{}` is never defined",
                    spec.name
                )));
            }
        }
        Ok(())
    }
}

fn infeasible(msg: String) -> Error {
    Error::InfeasiblePlan(msg)
}

/// Draws a corpus from the plan. The same plan always yields the same corpus.
pub fn generate(plan: &GeneratorPlan) -> Result<Generated> {
    plan.validate()?;
    let n = plan.n_objects;
    let k = plan.n_classes;
    let class_names = plan.class_names();
    let width = n.to_string().len().max(3);
    let ids: Vec<String> = (0..n).map(|i| format!("S{:0width$}", i + 1)).collect();

    let mut rng = stream_rng(plan.seed, 0);
    let mut true_classes: Vec<usize> = (0..n).map(|i| i % k).collect();
    true_classes.shuffle(&mut rng);

    // Unlabeled objects are taken round-robin over classes so every class keeps labeled members.
    let mut observed: Vec<Option<usize>> = true_classes.iter().map(|&c| Some(c)).collect();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in true_classes.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut unlabeled = 0;
    'outer: for round in 0.. {
        for members in &by_class {
            if unlabeled == plan.n_unlabeled {
                break 'outer;
            }
            // Keep at least one labeled member per class.
            if round + 1 < members.len() {
                observed[members[members.len() - 1 - round]] = None;
                unlabeled += 1;
            }
        }
        if by_class.iter().all(|m| round + 1 >= m.len()) {
            break;
        }
    }
    if unlabeled < plan.n_unlabeled {
        return Err(infeasible("too many unlabeled objects".into()));
    }

    let mut rng = stream_rng(plan.seed, 1);
    let mut labeled: Vec<usize> = (0..n).filter(|&i| observed[i].is_some()).collect();
    labeled.shuffle(&mut rng);
    let mut outliers: Vec<usize> = labeled[..plan.planted_outliers].to_vec();
    outliers.sort_unstable();
    for &i in &outliers {
        observed[i] = Some(other_class(true_classes[i], k, &mut rng));
    }
    let mut noisy = Vec::new();
    for &i in &labeled[plan.planted_outliers..] {
        if plan.label_noise > 0.0 && rng.gen::<f64>() < plan.label_noise {
            observed[i] = Some(other_class(true_classes[i], k, &mut rng));
            noisy.push(i);
        }
    }
    noisy.sort_unstable();

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::with_capacity(plan.features.len()); n];
    for (f, spec) in plan.features.iter().enumerate() {
        let defined = plan.defined_count(spec)?;
        let dists = plan.distributions(spec)?;
        let samplers: Vec<WeightedIndex<f64>> = dists
            .iter()
            .map(|d| WeightedIndex::new(d).map_err(|e| infeasible(format!("`{}`: {e}", spec.name))))
            .collect::<Result<_>>()?;
        let mut rng = stream_rng(plan.seed, 100 + f as u64);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut is_defined = vec![false; n];
        for &i in &order[..defined] {
            is_defined[i] = true;
        }
        for i in 0..n {
            let cell = is_defined[i].then(|| {
                let x = samplers[true_classes[i]].sample(&mut rng);
                match spec.kind {
                    FeatureKind::ClassCopy => class_names[x].clone(),
                    _ => format!("v{x}"),
                }
            });
            cells[i].push(cell);
        }
    }

    let rows = ids.iter().zip(cells).zip(&observed).map(|((id, values), label)| RawRow {
        id: id.clone(),
        values,
        label: label.map(|c| class_names[c].clone()),
    });
    let corpus = Corpus::from_rows(
        &plan.id_column,
        &plan.label_column,
        plan.features.iter().map(|s| s.name.clone()).collect(),
        rows,
    )?;

    let truth = GroundTruth {
        class_names,
        true_classes,
        observed,
        informative: plan
            .features
            .iter()
            .map(|s| (s.name.clone(), s.is_informative()))
            .collect(),
        outlier_ids: outliers.iter().map(|&i| ids[i].clone()).collect(),
        noisy_ids: noisy.iter().map(|&i| ids[i].clone()).collect(),
        ids,
    };
    Ok(Generated { corpus, truth })
}

fn other_class(class: usize, k: usize, rng: &mut impl Rng) -> usize {
    let shift = rng.gen_range(1..k);
    (class + shift) % k
}

/// Writes the corpus in the CSV dialect [`crate::corpus::parse_corpus`] reads.
pub fn write_corpus_csv<W: Write>(generated: &Generated, sink: W) -> Result<()> {
    generated
        .corpus
        .write_csv(sink, crate::corpus::DEFAULT_MISSING_TOKEN)
}

/// Strength of the informative features of [`default_plan`].
pub const DEFAULT_STRENGTH: f64 = 0.9;

/// Defined counts of the ten informative features of [`default_plan`].
pub const DEFAULT_INFORMATIVE_COUNTS: [usize; 10] = [22, 48, 54, 80, 141, 145, 165, 173, 182, 210];

const DEFAULT_INFORMATIVE_NAMES: [&str; 10] = [
    "subgroup",
    "nostrilmake",
    "posture",
    "dress",
    "eyeform",
    "hairlineshape",
    "curls",
    "straight",
    "pegwig",
    "chinform",
];

/// 210 objects in 3 classes with 68 sparse features, 10 of them informative.
pub fn default_plan() -> GeneratorPlan {
    let mut features: Vec<FeatureSpec> = DEFAULT_INFORMATIVE_NAMES
        .iter()
        .zip(DEFAULT_INFORMATIVE_COUNTS)
        .enumerate()
        .map(|(i, (name, count))| {
            FeatureSpec::new(*name, 3 + i % 3, count, FeatureKind::Informative { strength: DEFAULT_STRENGTH })
        })
        .collect();
    for j in 0..58 {
        // Defined counts spread over 12..=210, vocabularies of 2 to 6 values.
        let count = 12 + (j * 37) % 199;
        features.push(FeatureSpec::new(format!("attr{:02}", j + 1), 2 + j % 5, count, FeatureKind::Noise));
    }
    GeneratorPlan {
        n_objects: 210,
        n_classes: 3,
        class_names: Some(vec![
            "Phoenician".into(),
            "North Syrian".into(),
            "Intermediate".into(),
        ]),
        id_column: default_id_column(),
        label_column: default_label_column(),
        features,
        label_noise: 0.0,
        planted_outliers: 0,
        n_unlabeled: 0,
        seed: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheo::rank_features;

    fn small_plan() -> GeneratorPlan {
        GeneratorPlan {
            n_objects: 30,
            n_classes: 2,
            class_names: None,
            id_column: "id".into(),
            label_column: "y".into(),
            features: vec![
                FeatureSpec::new("copy", 0, 30, FeatureKind::ClassCopy),
                FeatureSpec::new("noise", 4, 17, FeatureKind::Noise),
            ],
            label_noise: 0.0,
            planted_outliers: 0,
            n_unlabeled: 0,
            seed: 5,
        }
    }

    #[test]
    fn default_counts_are_exact() {
        let g = generate(&default_plan()).unwrap();
        let summary = g.corpus.feature_summary();
        assert_eq!(summary.len(), 68);
        for (s, &count) in summary.iter().zip(&DEFAULT_INFORMATIVE_COUNTS) {
            assert_eq!(s.defined_count, count);
        }
        assert_eq!(g.corpus.class_counts(), vec![70, 70, 70]);
        assert_eq!(g.truth.informative.iter().filter(|f| f.1).count(), 10);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&default_plan()).unwrap();
        let b = generate(&default_plan()).unwrap();
        assert_eq!(a.corpus, b.corpus);
        let mut other = default_plan();
        other.seed = 2;
        assert_ne!(a.corpus, generate(&other).unwrap().corpus);
    }

    #[test]
    fn class_copy_ranks_first() {
        let g = generate(&small_plan()).unwrap();
        let ranking = rank_features(&g.corpus, "y", 200, 1).unwrap();
        assert_eq!(ranking.features[0].name, "copy");
        assert!((ranking.features[0].rho.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_outliers_are_reported() {
        let mut plan = default_plan();
        plan.planted_outliers = 5;
        let g = generate(&plan).unwrap();
        assert_eq!(g.truth.outlier_ids.len(), 5);
        for id in &g.truth.outlier_ids {
            let i = g.truth.ids.iter().position(|x| x == id).unwrap();
            assert_ne!(g.truth.observed[i], Some(g.truth.true_classes[i]));
        }
    }

    #[test]
    fn unlabeled_objects_keep_classes_covered() {
        let mut plan = small_plan();
        plan.n_unlabeled = 10;
        let g = generate(&plan).unwrap();
        assert_eq!(g.corpus.unlabeled_indices().len(), 10);
        assert_eq!(g.corpus.label_set().len(), 2);
    }

    #[test]
    fn infeasible_plans_rejected() {
        let mut plan = small_plan();
        plan.features[0].defined_count = Some(0);
        assert!(matches!(generate(&plan), Err(Error::InfeasiblePlan(_))));

        let mut plan = small_plan();
        plan.features[1].defined_count = Some(31);
        assert!(generate(&plan).is_err());

        let mut plan = small_plan();
        plan.features.push(FeatureSpec::new(
            "bad",
            2,
            10,
            FeatureKind::Conditional { distributions: vec![vec![0.5, 0.6], vec![1.0, 0.0]] },
        ));
        assert!(generate(&plan).is_err());

        let mut plan = small_plan();
        plan.n_classes = 1;
        assert!(generate(&plan).is_err());
    }

    #[test]
    fn toml_plan() {
        let plan = GeneratorPlan::from_toml(
            r#"
            n_objects = 12
            n_classes = 2
            seed = 3

            [[features]]
            name = "a"
            vocabulary_size = 3
            defined_fraction = 0.5
            kind = { type = "informative", strength = 0.9 }

            [[features]]
            name = "b"
            vocabulary_size = 2
            kind = { type = "conditional", distributions = [[1.0, 0.0], [0.25, 0.75]] }
            "#,
        )
        .unwrap();
        let g = generate(&plan).unwrap();
        let summary = g.corpus.feature_summary();
        assert_eq!(summary[0].defined_count, 6);
        assert_eq!(summary[1].defined_count, 12);
        assert!(GeneratorPlan::from_toml("n_objects = \"x\"").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = generate(&default_plan()).unwrap();
        let mut buf = Vec::new();
        write_corpus_csv(&g, &mut buf).unwrap();
        let parsed = crate::corpus::parse_corpus(
            buf.as_slice(),
            &crate::corpus::ParseOptions::new("RSG"),
        )
        .unwrap();
        assert_eq!(parsed, g.corpus);
    }
}
