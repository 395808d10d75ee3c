use std::ops::Range;

use super::{Corpus, FeatureSchema, ObjectRecord};

/// One-hot rows for a corpus. A feature occupies one block of columns, one
/// column per vocabulary value; a missing cell leaves its block all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: Vec<Vec<f64>>,
    /// `(feature, value)` for each column.
    pub column_map: Vec<(String, String)>,
    /// Column range of each feature block, in schema order.
    pub blocks: Vec<Range<usize>>,
    /// Class index per row, `None` for unlabeled rows.
    pub labels: Vec<Option<usize>>,
    pub class_names: Vec<String>,
    pub ids: Vec<String>,
}

impl DesignMatrix {
    pub fn n_columns(&self) -> usize {
        self.column_map.len()
    }

    pub fn column_index(&self, feature: &str, value: &str) -> Option<usize> {
        self.column_map
            .iter()
            .position(|(f, v)| f == feature && v == value)
    }
}

fn block_ranges(schema: &[FeatureSchema]) -> Vec<Range<usize>> {
    let mut start = 0;
    schema
        .iter()
        .map(|f| {
            let r = start..start + f.vocabulary.len();
            start = r.end;
            r
        })
        .collect()
}

/// Encodes a single record against a schema.
pub fn encode_record(schema: &[FeatureSchema], record: &ObjectRecord) -> Vec<f64> {
    let blocks = block_ranges(schema);
    let width = blocks.last().map_or(0, |b| b.end);
    let mut row = vec![0.0; width];
    for (block, value) in blocks.iter().zip(&record.values) {
        if let Some(v) = value {
            row[block.start + v] = 1.0;
        }
    }
    row
}

pub fn one_hot_encode(corpus: &Corpus) -> DesignMatrix {
    let schema = corpus.schema();
    let column_map = schema
        .iter()
        .flat_map(|f| f.vocabulary.iter().map(|v| (f.name.clone(), v.clone())))
        .collect();
    DesignMatrix {
        rows: corpus
            .records()
            .iter()
            .map(|r| encode_record(schema, r))
            .collect(),
        column_map,
        blocks: block_ranges(schema),
        labels: corpus.records().iter().map(|r| r.label).collect(),
        class_names: corpus.label_set().to_vec(),
        ids: corpus.records().iter().map(|r| r.id.clone()).collect(),
    }
}
