//! Classification and feature analysis for sparse categorical corpora.
//!
//! The crate covers the whole pipeline for tables of objects described by
//! categorical features with many missing cells and a style-group label:
//!
//! - [`corpus`]: CSV parsing, per-feature summaries, one-hot encoding and
//!   stratified partitioning.
//! - [`infotheo`]: entropy, mutual information, the min-entropy normalized
//!   mutual information `rho`, permutation significance and feature ranking.
//! - [`svm`]: binary soft-margin SVMs trained by sequential minimal
//!   optimization, assembled into a one-vs-one voter.
//! - [`bayes`]: categorical Naive Bayes and nomograms.
//! - [`eval`]: repeated stratified cross-validation, per-object
//!   misclassification rates, outlier reports and classification of
//!   unlabeled objects.
//! - [`synthgen`]: ground-truth synthetic corpora.
//! - [`cli`]: the `rsgkit` command line front end.
//!
//! All resampling is seeded. Each random stream is derived from a master seed
//! and a stream index, so parallel execution never changes a result.

#![forbid(unsafe_code)]

pub mod bayes;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod infotheo;
pub mod rng;
pub mod svm;
pub mod synthgen;

pub use error::{Error, Result};
