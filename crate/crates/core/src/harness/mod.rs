//! Experimental protocol: balanced splits, cross-validation, metrics, ablation, reporting.

pub mod ablation;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod splits;

pub use ablation::{ablation_suite, table_facet_sets, AblationRow};
pub use metrics::{metrics, Metrics};
pub use protocol::{
    cross_validate, protocol_folds, run_protocol, BaselineTrainer, ExperimentResult, GnnTrainer, Protocol, RunLabel,
    Trainer,
};
pub use report::{
    ablation_table, format_mean_std, mean_std, read_results_csv, summarize, summary_table, write_results_csv,
    SummaryRow,
};
pub use splits::{balanced_splits, derive_seed, stratified_folds, BalancedSplit, Fold};
