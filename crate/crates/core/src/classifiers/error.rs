use std::time::Duration;

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("model document: {0}")]
    Document(String),

    #[error("invalid class list: {0}")]
    InvalidClasses(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("unknown value `{value}` for feature `{feature}`")]
    UnknownValue { feature: String, value: String },

    #[error("incomplete branches on `{feature}`: missing {}", .missing.join(", "))]
    IncompleteBranches {
        feature: String,
        missing: Vec<String>,
    },

    #[error("leaf label `{0}` is not a declared class")]
    UnknownClassAtLeaf(String),

    #[error("{what} sums to {sum}, expected 1")]
    ProbabilitySum { what: String, sum: f64 },

    #[error("negative probability in {0}")]
    NegativeProbability(String),

    #[error("missing probability table entry: {0}")]
    MissingRow(String),

    #[error("table does not cover entity {0}")]
    MissingEntity(String),

    #[error("table lists entity {0} more than once")]
    DuplicateEntity(String),

    #[error("dataset: {0}")]
    Dataset(#[from] ModelError),

    #[error("all class scores are zero")]
    DegenerateLikelihood,

    #[error("external classifier: no response to request {id} within {timeout:?}")]
    ExternalTimeout { id: u64, timeout: Duration },

    #[error("external classifier protocol: {0}")]
    ExternalProtocol(String),

    #[error("entity #{index}: {source}")]
    AtIndex {
        index: usize,
        source: Box<ClassifierError>,
    },
}

impl ClassifierError {
    pub(crate) fn at(self, index: usize) -> Self {
        match self {
            err @ Self::AtIndex { .. } => err,
            other => Self::AtIndex {
                index,
                source: Box::new(other),
            },
        }
    }

    /// Strips any batch-index wrapper.
    pub fn root(&self) -> &ClassifierError {
        match self {
            Self::AtIndex { source, .. } => source.root(),
            other => other,
        }
    }
}
