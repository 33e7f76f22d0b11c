//! Counterfactual intervention semantics, computed directly over the
//! intervention space.
//!
//! Models are admissible counterfactual versions of an entity: the label
//! flips (or reaches the target class) and every hard constraint holds on
//! the resulting entity. Minimum-change selection is a size-layered
//! search that stops at the first layer with an admissible model, which
//! is what a "fewer changes" weak constraint selects among answer sets.

mod compare;
mod error;
mod query;
mod search;

use std::fmt;
use std::str::FromStr;

use crate::classifiers::Classifier;
use crate::model::{CounterfactualModel, Entity, FeatureSchema};
use crate::speclang::Constraint;

pub use compare::{compare_classifiers, ComparisonReport, FeatureComparison};
pub use error::EngineError;
pub use query::{answer_query, QueryAnswer, QueryMode, QueryStatus};
pub(crate) use search::{check_constraint_classes, satisfies_all, subsets_by_name, worker_pool};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Minimality {
    /// Every admissible model up to `max_changes`.
    None,
    /// Changed-set minimal: no proper nonempty subset supports a model.
    Subset,
    /// Globally fewest changes.
    Cardinality,
}

impl fmt::Display for Minimality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Subset => "subset",
            Self::Cardinality => "card",
        })
    }
}

impl FromStr for Minimality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "subset" => Ok(Self::Subset),
            "card" | "cardinality" => Ok(Self::Cardinality),
            other => Err(format!("unknown minimality `{other}` (none|subset|card)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CipConfig {
    /// Required class of counterfactuals; `None` means "any other label".
    pub target: Option<String>,
    /// Defaults to the number of features.
    pub max_changes: Option<usize>,
    pub minimality: Minimality,
    pub constraints: Vec<Constraint>,
    /// Maximum number of candidate interventions visited.
    pub budget: u64,
    pub parallelism: usize,
    /// Fail with `BudgetExceeded` instead of returning partial results.
    pub strict: bool,
}

impl Default for CipConfig {
    fn default() -> Self {
        Self {
            target: None,
            max_changes: None,
            minimality: Minimality::Cardinality,
            constraints: Vec::new(),
            budget: DEFAULT_BUDGET,
            parallelism: 1,
            strict: false,
        }
    }
}

impl CipConfig {
    pub(crate) fn validate(&self) -> Result<(), EngineError> {
        if self.max_changes == Some(0) {
            return Err(EngineError::InvalidConfig("max_changes must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(EngineError::InvalidConfig("budget must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(EngineError::InvalidConfig("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

/// Canonically ordered admissible models of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub original: Entity,
    pub original_label: String,
    pub classes: Vec<String>,
    /// Ordered by size, then changed feature names, then value positions.
    pub models: Vec<CounterfactualModel>,
    /// `false` when the budget cut the search short.
    pub exhausted: bool,
    pub minimality: Minimality,
    /// Candidate interventions examined.
    pub visited: u64,
}

impl ModelSet {
    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    /// Size of the smallest model, if any.
    pub fn min_size(&self) -> Option<usize> {
        self.models.first().map(CounterfactualModel::size)
    }

    /// Distinct changed-sets (feature indices in name order), canonical order.
    pub fn changed_sets(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for m in &self.models {
            let c = m.changed();
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

/// All admissible models with `1 <= |changed| <= max_changes`, ignoring
/// `cfg.minimality`.
pub fn enumerate_counterfactuals(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    cfg: &CipConfig,
) -> Result<ModelSet, EngineError> {
    search::search(schema, e, classifier, cfg, Minimality::None)
}

/// Admissible models filtered by `cfg.minimality`.
pub fn minimal_counterfactuals(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    cfg: &CipConfig,
) -> Result<ModelSet, EngineError> {
    search::search(schema, e, classifier, cfg, cfg.minimality)
}

/// Cardinality-minimal models. In a model of size `s` every changed
/// feature has responsibility at least `1/s`, with the other changed
/// features as contingency.
pub fn max_responsibility_counterfactuals(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    cfg: &CipConfig,
) -> Result<ModelSet, EngineError> {
    search::search(schema, e, classifier, cfg, Minimality::Cardinality)
}

#[cfg(test)]
mod tests;
