//! Categorical corpora with missing cells.
//!
//! A [`Corpus`] is an immutable table of objects by categorical features. Each
//! cell is either a value from the feature's vocabulary or missing, and each
//! object optionally carries a class label. Vocabularies and the label set are
//! kept in first-appearance order so encodings are deterministic and
//! independent of locale collation.

mod encode;
mod folds;

pub use encode::{encode_record, one_hot_encode, DesignMatrix};
pub use folds::{stratified_folds, stratified_holdout};

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Token that marks a missing cell unless overridden.
pub const DEFAULT_MISSING_TOKEN: &str = "?";

/// A categorical feature and its observed values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    pub name: String,
    /// Distinct values in first-appearance order. Empty only when the feature
    /// is missing on every object.
    pub vocabulary: Vec<String>,
}

impl FeatureSchema {
    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.vocabulary.iter().position(|v| v == value)
    }
}

/// One object. Values are indices into the matching feature's vocabulary and
/// the label is an index into the corpus label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectRecord {
    pub id: String,
    pub values: Vec<Option<usize>>,
    pub label: Option<usize>,
}

impl ObjectRecord {
    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

/// A row before vocabulary coding, as read from a file or produced by a generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    pub id: String,
    pub values: Vec<Option<String>>,
    pub label: Option<String>,
}

/// Options for [`parse_corpus`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub label_column: String,
    pub missing_token: String,
}

impl ParseOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            missing_token: DEFAULT_MISSING_TOKEN.to_string(),
        }
    }
}

/// Per-feature counts reported by [`Corpus::feature_summary`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSummary {
    pub name: String,
    pub defined_count: usize,
    pub vocabulary_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    id_column: String,
    label_column: String,
    schema: Vec<FeatureSchema>,
    records: Vec<ObjectRecord>,
    label_set: Vec<String>,
}

/// Reads a header-rowed CSV table whose first column is the object id.
///
/// Every column other than the id and `options.label_column` becomes a
/// feature. Cells that are empty or equal to the missing token are missing.
pub fn parse_corpus<R: Read>(source: R, options: &ParseOptions) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyInput),
    };
    if header.is_empty() {
        return Err(Error::EmptyInput);
    }
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    let label_pos = header
        .iter()
        .position(|h| *h == options.label_column)
        .ok_or_else(|| Error::UnknownColumn(options.label_column.clone()))?;
    if label_pos == 0 {
        return Err(Error::InvalidArgument(format!(
            "label column `{}` is the id column",
            options.label_column
        )));
    }

    let is_missing = |cell: &str| cell.is_empty() || cell == options.missing_token;
    let mut raw = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != header.len() {
            return Err(Error::RaggedRow {
                row: line,
                expected: header.len(),
                found: row.len(),
            });
        }
        let mut values = Vec::with_capacity(header.len() - 2);
        let mut label = None;
        for (col, cell) in row.iter().enumerate().skip(1) {
            let cell = (!is_missing(cell)).then(|| cell.to_string());
            if col == label_pos {
                label = cell;
            } else {
                values.push(cell);
            }
        }
        raw.push(RawRow {
            id: row[0].to_string(),
            values,
            label,
        });
    }

    let features = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != 0 && i != label_pos)
        .map(|(_, h)| h.clone())
        .collect();
    Corpus::from_rows(&header[0], &header[label_pos], features, raw)
}

impl Corpus {
    /// Builds a corpus from uncoded rows, assigning vocabularies and the label
    /// set in first-appearance order.
    pub fn from_rows(
        id_column: &str,
        label_column: &str,
        feature_names: Vec<String>,
        rows: impl IntoIterator<Item = RawRow>,
    ) -> Result<Self> {
        let mut seen_names = HashSet::new();
        for name in std::iter::once(id_column)
            .chain(feature_names.iter().map(String::as_str))
            .chain(std::iter::once(label_column))
        {
            if !seen_names.insert(name) {
                return Err(Error::DuplicateColumn(name.to_string()));
            }
        }

        let mut schema: Vec<FeatureSchema> = feature_names
            .into_iter()
            .map(|name| FeatureSchema {
                name,
                vocabulary: Vec::new(),
            })
            .collect();
        let mut vocab_index: Vec<HashMap<String, usize>> = vec![HashMap::new(); schema.len()];
        let mut label_set = Vec::new();
        let mut label_index: HashMap<String, usize> = HashMap::new();
        let mut ids = HashSet::new();
        let mut records = Vec::new();

        for (row_no, row) in rows.into_iter().enumerate() {
            if row.values.len() != schema.len() {
                return Err(Error::RaggedRow {
                    row: row_no + 2,
                    expected: schema.len() + 2,
                    found: row.values.len() + 2,
                });
            }
            if !ids.insert(row.id.clone()) {
                return Err(Error::DuplicateId(row.id));
            }
            let values = row
                .values
                .into_iter()
                .enumerate()
                .map(|(f, cell)| {
                    cell.map(|v| {
                        let next = vocab_index[f].len();
                        *vocab_index[f].entry(v.clone()).or_insert_with(|| {
                            schema[f].vocabulary.push(v);
                            next
                        })
                    })
                })
                .collect();
            let label = row.label.map(|l| {
                let next = label_index.len();
                *label_index.entry(l.clone()).or_insert_with(|| {
                    label_set.push(l);
                    next
                })
            });
            records.push(ObjectRecord {
                id: row.id,
                values,
                label,
            });
        }

        Ok(Self {
            id_column: id_column.to_string(),
            label_column: label_column.to_string(),
            schema,
            records,
            label_set,
        })
    }

    pub fn id_column(&self) -> &str {
        &self.id_column
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn schema(&self) -> &[FeatureSchema] {
        &self.schema
    }

    pub fn records(&self) -> &[ObjectRecord] {
        &self.records
    }

    pub fn label_set(&self) -> &[String] {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|f| f.name == name)
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.label_set.iter().position(|l| l == label)
    }

    pub fn value_name(&self, feature: usize, value: usize) -> &str {
        &self.schema[feature].vocabulary[value]
    }

    pub fn label_name(&self, record: &ObjectRecord) -> Option<&str> {
        record.label.map(|l| self.label_set[l].as_str())
    }

    /// Indices of records that carry a label.
    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.records.len())
            .filter(|&i| self.records[i].label.is_some())
            .collect()
    }

    /// Indices of records without a label.
    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.records.len())
            .filter(|&i| self.records[i].label.is_none())
            .collect()
    }

    /// Labeled record count per class, in label-set order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_set.len()];
        for r in &self.records {
            if let Some(l) = r.label {
                counts[l] += 1;
            }
        }
        counts
    }

    /// Non-missing cell count and vocabulary size per feature, in schema order.
    pub fn feature_summary(&self) -> Vec<FeatureSummary> {
        self.schema
            .iter()
            .enumerate()
            .map(|(f, feat)| FeatureSummary {
                name: feat.name.clone(),
                defined_count: self.records.iter().filter(|r| r.values[f].is_some()).count(),
                vocabulary_size: feat.vocabulary.len(),
            })
            .collect()
    }

    /// A record coded against this corpus' schema. Features not listed are missing.
    pub fn make_record(
        &self,
        id: &str,
        values: &[(&str, &str)],
        label: Option<&str>,
    ) -> Result<ObjectRecord> {
        let mut coded = vec![None; self.schema.len()];
        for &(feature, value) in values {
            let f = self
                .feature_index(feature)
                .ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
            let v = self.schema[f].value_index(value).ok_or_else(|| {
                Error::InvalidRecord(format!("`{value}` is not a value of `{feature}`"))
            })?;
            coded[f] = Some(v);
        }
        let label = label
            .map(|l| {
                self.class_index(l)
                    .ok_or_else(|| Error::UnknownClass(l.to_string()))
            })
            .transpose()?;
        Ok(ObjectRecord {
            id: id.to_string(),
            values: coded,
            label,
        })
    }

    /// Keeps only the named features, in the order given. Vocabularies are
    /// carried over unchanged so records stay comparable with the source.
    pub fn select_features(&self, names: &[&str]) -> Result<Corpus> {
        let mut picks = Vec::with_capacity(names.len());
        for name in names {
            let f = self
                .feature_index(name)
                .ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
            if picks.contains(&f) {
                return Err(Error::DuplicateColumn(name.to_string()));
            }
            picks.push(f);
        }
        Ok(Corpus {
            id_column: self.id_column.clone(),
            label_column: self.label_column.clone(),
            schema: picks.iter().map(|&f| self.schema[f].clone()).collect(),
            records: self
                .records
                .iter()
                .map(|r| ObjectRecord {
                    id: r.id.clone(),
                    values: picks.iter().map(|&f| r.values[f]).collect(),
                    label: r.label,
                })
                .collect(),
            label_set: self.label_set.clone(),
        })
    }

    /// Writes the corpus in the dialect [`parse_corpus`] reads: id first,
    /// features in schema order, label last, missing cells as `missing_token`.
    pub fn write_csv<W: Write>(&self, sink: W, missing_token: &str) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec![self.id_column.as_str()];
        header.extend(self.schema.iter().map(|f| f.name.as_str()));
        header.push(&self.label_column);
        writer.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.id.as_str()];
            for (f, v) in r.values.iter().enumerate() {
                row.push(v.map_or(missing_token, |v| self.value_name(f, v)));
            }
            row.push(self.label_name(r).unwrap_or(missing_token));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// TSV rendering of a feature summary: `feature, defined_count, vocabulary_size`.
pub fn summary_tsv(summary: &[FeatureSummary]) -> String {
    let mut out = String::from("feature\tdefined_count\tvocabulary_size\n");
    for s in summary {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            s.name, s.defined_count, s.vocabulary_size
        ));
    }
    out
}
