use thiserror::Error;

use super::EntityViolation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("product space exceeds 2^63-1 entities")]
    SpaceTooLarge,

    #[error("invalid entity: {}", join_violations(.0))]
    InvalidEntity(Vec<EntityViolation>),

    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),

    #[error("budget exceeded: {required} candidates required, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset header: {0}")]
    DatasetHeader(String),

    #[error("dataset row {row}: {}", join_violations(.violations))]
    DatasetRow {
        row: usize,
        violations: Vec<EntityViolation>,
    },

    #[error("dataset: {0}")]
    DatasetFormat(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

pub(crate) fn join_violations(violations: &[EntityViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
