use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("plan file error: {0}")]
    Plan(#[from] toml::de::Error),

    #[error("input has no header row")]
    EmptyInput,

    #[error("duplicate column name `{0}` in header")]
    DuplicateColumn(String),

    #[error("duplicate object id `{0}`")]
    DuplicateId(String),

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("entropy of an all-zero count vector is undefined")]
    ZeroCounts,

    #[error("normalized mutual information is undefined: a marginal has zero entropy")]
    UndefinedRho,

    #[error("target `{0}` is missing on every object")]
    TargetAllMissing(String),

    #[error("no labeled records")]
    NoLabeledRecords,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class `{0}` has no labeled rows")]
    EmptyClass(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "SMO did not converge after {sweeps} sweeps and {steps} steps \
         (kkt gap {kkt_gap:.3e}, dual objective {objective:.6})"
    )]
    NonConvergence {
        sweeps: usize,
        steps: usize,
        kkt_gap: f64,
        objective: f64,
    },

    #[error("model file: {0}")]
    Model(String),

    #[error("infeasible generator plan: {0}")]
    InfeasiblePlan(String),

    #[error("repeat {repeat}, fold {fold}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        source: Box<Error>,
    },

    #[error("trial {trial}: {source}")]
    Trial { trial: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
