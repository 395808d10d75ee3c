//! JSON model files.
//!
//! A model file records the column layout it was trained on together with a
//! SHA-256 digest of that layout, the class list, and for every pair machine
//! its bias and support vectors (multiplier, target and sparse row). Floats
//! are written in shortest round-trip form, so a loaded model reproduces the
//! saved model's decision values bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::multiclass::{Kernel, PairMachine, SupportVector, SvmModel};
use crate::error::{Error, Result};

const FORMAT: &str = "rsgkit-svm";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    kernel: Kernel,
    schema_hash: String,
    column_map: Vec<(String, String)>,
    class_names: Vec<String>,
    classes: Vec<usize>,
    c: f64,
    tol: f64,
    machines: Vec<MachineFile>,
}

#[derive(Serialize, Deserialize)]
struct MachineFile {
    positive: usize,
    negative: usize,
    b: f64,
    support: Vec<SupportFile>,
}

#[derive(Serialize, Deserialize)]
struct SupportFile {
    alpha: f64,
    target: f64,
    /// Nonzero `(column, value)` entries.
    row: Vec<(usize, f64)>,
}

/// Hex SHA-256 of a column layout.
pub fn schema_hash(column_map: &[(String, String)]) -> String {
    let mut hasher = Sha256::new();
    for (feature, value) in column_map {
        hasher.update(feature.as_bytes());
        hasher.update([0x1f]);
        hasher.update(value.as_bytes());
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

impl SvmModel {
    pub fn schema_hash(&self) -> String {
        schema_hash(&self.column_map)
    }

    pub fn save<W: Write>(&self, sink: W) -> Result<()> {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            kernel: self.kernel,
            schema_hash: self.schema_hash(),
            column_map: self.column_map.clone(),
            class_names: self.class_names.clone(),
            classes: self.classes.clone(),
            c: self.c,
            tol: self.tol,
            machines: self
                .machines
                .iter()
                .map(|m| MachineFile {
                    positive: m.positive,
                    negative: m.negative,
                    b: m.b,
                    support: m
                        .support
                        .iter()
                        .map(|sv| SupportFile {
                            alpha: sv.alpha,
                            target: sv.target,
                            row: sv
                                .row
                                .iter()
                                .enumerate()
                                .filter(|(_, &v)| v != 0.0)
                                .map(|(i, &v)| (i, v))
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_writer_pretty(sink, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(source: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(source)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Model(format!(
                "unsupported format {} v{}",
                file.format, file.version
            )));
        }
        if schema_hash(&file.column_map) != file.schema_hash {
            return Err(Error::Model("schema hash does not match column map".into()));
        }
        let dim = file.column_map.len();
        let k = file.class_names.len();
        if file.classes.len() < 2 || file.classes.iter().any(|&c| c >= k) {
            return Err(Error::Model("invalid class list".into()));
        }
        let mut machines = Vec::with_capacity(file.machines.len());
        for m in file.machines {
            if !file.classes.contains(&m.positive) || !file.classes.contains(&m.negative) {
                return Err(Error::Model("machine refers to an untrained class".into()));
            }
            let mut support = Vec::with_capacity(m.support.len());
            for sv in m.support {
                let mut row = vec![0.0; dim];
                for (i, v) in sv.row {
                    *row.get_mut(i).ok_or_else(|| {
                        Error::Model(format!("support row column {i} out of range"))
                    })? = v;
                }
                support.push(SupportVector {
                    alpha: sv.alpha,
                    target: sv.target,
                    row,
                });
            }
            machines.push(PairMachine {
                positive: m.positive,
                negative: m.negative,
                b: m.b,
                support,
            });
        }
        let n = file.classes.len();
        if machines.len() != n * (n - 1) / 2 {
            return Err(Error::Model(format!(
                "{} machines for {n} classes",
                machines.len()
            )));
        }
        Ok(SvmModel {
            class_names: file.class_names,
            classes: file.classes,
            machines,
            column_map: file.column_map,
            kernel: file.kernel,
            c: file.c,
            tol: file.tol,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{one_hot_encode, Corpus, RawRow};
    use crate::svm::train_multiclass;

    #[test]
    fn save_load_reproduces_decisions_exactly() {
        let rows = (0..30).map(|i| RawRow {
            id: format!("o{i}"),
            values: vec![Some(format!("a{}", i % 3)), Some(format!("b{}", (i * 7) % 4))],
            label: Some(format!("C{}", i % 3)),
        });
        let corpus = Corpus::from_rows("id", "y", vec!["f".into(), "g".into()], rows).unwrap();
        let m = one_hot_encode(&corpus);
        let model = train_multiclass(&m, 0.7, 1e-3).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = SvmModel::load(buf.as_slice()).unwrap();
        assert_eq!(loaded, model);
        for row in &m.rows {
            for (a, b) in model.machines.iter().zip(&loaded.machines) {
                assert_eq!(a.decision_value(row).to_bits(), b.decision_value(row).to_bits());
            }
        }
    }

    #[test]
    fn tampered_layout_rejected() {
        let rows = (0..6).map(|i| RawRow {
            id: format!("o{i}"),
            values: vec![Some(format!("a{}", i % 2))],
            label: Some(format!("C{}", i % 2)),
        });
        let corpus = Corpus::from_rows("id", "y", vec!["f".into()], rows).unwrap();
        let model = train_multiclass(&one_hot_encode(&corpus), 1.0, 1e-3).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("\"a0\"", "\"zz\"", 1);
        assert!(matches!(SvmModel::load(text.as_bytes()), Err(Error::Model(_))));
    }
}
