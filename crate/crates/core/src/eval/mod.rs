//! Repeatable evaluation protocols over any [`Classifier`]: consistency,
//! accuracy against a ground truth, adaptability under focus, and an audit
//! of decision-log explanations.

mod classifier;
mod protocols;
mod report;
mod trials;

use thiserror::Error;

pub use classifier::{
    Classifier, ClassifierEnv, ClassifierError, ClassifierRegistry, ConstantClassifier,
    CskClassifier, DynClassifier, NonAdaptiveClassifier, RoundRobinClassifier,
};
pub use protocols::{
    run_accuracy, run_adaptability, run_consistency, run_explainability_audit, run_trial,
    AccuracyReport, AccuracyRow, AdaptabilityReport, Adaptivity, AuditFailure, AuditFailureKind,
    AuditReport, ConsistencyReport, ShiftRow, TrialOutcome, UNMATCHED,
};
pub use report::{
    write_accuracy, write_adaptability, write_audit, write_consistency, ACCURACY_COLUMNS,
    ADAPTABILITY_COLUMNS, AUDIT_COLUMNS, CONSISTENCY_COLUMNS,
};
pub use trials::{read_ground_truth, read_trial_specs, GroundTruth, TrialSpec};

use crate::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {reason}")]
    MalformedInput { line: u64, reason: String },
    #[error("object `{0}` appears twice in the ground truth")]
    DuplicateGroundTruth(String),
    #[error("no ground truth for object `{0}`")]
    MissingGroundTruth(String),
    #[error("ground truth for `{object}` is `{context}`, which is not a candidate context")]
    TruthOutsideCandidates { object: String, context: String },
    #[error("trial for `{object}` has {repetitions} repetition(s); at least 2 are needed")]
    TooFewRepetitions { object: String, repetitions: u32 },
    #[error("adaptability needs at least 2 contexts, got {0}")]
    TooFewContexts(usize),
    #[error("classifier failed: {0}")]
    Classifier(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
