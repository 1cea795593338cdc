//! Prediction and explanation of service failures in last-mile
//! pickup/delivery data.
//!
//! The crate covers the whole analysis chain:
//!
//! * [`ingest`]: service-level CSV parsing, deduplication, imputation,
//!   categorical encoding and aggregation of services into per-stop records.
//! * [`synthgen`]: a synthetic stop generator with planted feature/failure
//!   associations and the closed-form oracle for their interest ratio.
//! * [`resample`]: random undersampling, NearMiss-3 and SMOTE.
//! * [`forest`]: a from-scratch Random Forest with OOB scoring, grid search
//!   and mean-decrease-impurity importances.
//! * [`rules`]: decile itemization, FP-growth over the failed set, support
//!   counting over the corpus and interest-ratio rule selection.
//! * [`eval`]: one-vs-rest binarization, stratified k-fold cross-validation
//!   and sensitivity/specificity reporting.
//! * [`pipeline`]: the end-to-end orchestration used by the CLI.
//!
//! Data-parallel loops run on rayon when the `parallel` feature (default) is
//! enabled and fall back to plain iterators otherwise. Results are identical
//! either way: every random stream is derived from a master seed and a
//! stable label, never from scheduling order.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod ingest;
pub mod par;
pub mod pipeline;
pub mod resample;
pub mod rules;
pub mod schema;
pub mod seed;
pub mod synthgen;

pub use data::{BinaryData, Matrix};
pub use error::{Error, ErrorKind, Result};
pub use schema::{Dataset, EncodingMap, FailureType, FeatureKind, FeatureSchema, FeatureSpec, Outcome};
