use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Classifier(#[from] ClassifierError),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("target class `{0}` equals the original label; no counterfactual can reach it")]
    InvalidTarget(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("search budget of {budget} candidates exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("classifiers disagree on classes: {a:?} vs {b:?}")]
    ClassMismatch { a: Vec<String>, b: Vec<String> },
}
