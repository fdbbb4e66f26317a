//! Person-centric knowledge graphs for 30-day readmission prediction.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`cohortgen`]: synthetic admission cohorts with realistic missingness.
//! - [`preprocess`]: ICD-9 family grouping, readmission labeling, exclusions and cohort filtering.
//! - [`pkg`]: one star-shaped HSPO knowledge graph per admission, with N-Triples I/O.
//! - [`graphx`]: numeric graphs at four heterogeneity levels with bag-of-words features.
//! - [`gnn`]: relational Sage/attention convolutions with basis decomposition, trained with Adam.
//! - [`baselines`]: tabular encodings and classical classifiers.
//! - [`harness`]: balanced splits, cross-validation, metrics, ablations and reports.

pub mod baselines;
pub mod codes;
pub mod cohortgen;
pub mod error;
pub mod gnn;
pub mod graphx;
pub mod harness;
pub mod pkg;
pub mod preprocess;
pub mod record;

pub use error::{Error, Result};
pub use record::AdmissionRecord;
