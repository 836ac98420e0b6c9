//! CSL skip-length classification: dataset, folds, training and reports.

mod dataset;
mod folds;
mod report;
mod train;

pub use dataset::{build_csl_dataset, CslDataset, Provenance, COPIES_PER_CLASS, CSL_SKIPS, CSL_VERTICES};
pub use folds::{make_folds, Fold, FoldPlan, NUM_FOLDS};
pub use report::{emit_report, read_report, ConfigFile, SummaryFile};
pub use train::{
    accuracy, argmax, confusion_matrix, run_experiment, train_fold, ModelKind, RunRecord, RunReport, TrainConfig,
    TrainedRun,
};
