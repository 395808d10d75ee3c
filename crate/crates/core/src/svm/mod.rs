//! Linear soft-margin SVMs trained from scratch by sequential minimal
//! optimization, combined one-vs-one for multiclass problems.

mod multiclass;
mod persist;
mod smo;

pub use multiclass::{
    train_multiclass, train_on_rows, Kernel, PairMachine, SupportVector, SvmModel, SvmPrediction,
};
pub use persist::schema_hash;
pub use smo::{
    kkt_violations, smo_train_binary, BinaryProblem, DualSolution, DEFAULT_C, DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
};
