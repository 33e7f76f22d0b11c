//! Attribution scores for feature values: x-resp, resp and exact Shap,
//! plus an exhaustive x-resp oracle.
//!
//! x-resp of a feature `F` is `1/(1+s)` for the least `s` such that some
//! label-preserving contingency `Γ` of `s` other features, followed by a
//! change of `F`, flips the label (and the flipped entity satisfies the
//! hard constraints). resp weights the flipping values of `F` by their
//! population probability at that least size. Shap uses the expected
//! indicator of the original label as the coalition payoff.

mod oracle;
mod report;
mod responsibility;
mod shapley;

use thiserror::Error;

use crate::classifiers::Classifier;
use crate::engine::{CipConfig, EngineError, DEFAULT_BUDGET};
use crate::model::{Entity, FeatureSchema, PopulationDistribution};
use crate::scalar::Scalar;
use crate::speclang::{Constraint, EvalContext};

pub use oracle::{oracle_xresp, ORACLE_SPACE_LIMIT};
pub use report::{score_report, ReportOptions, ScoreKind, ScoreReport, ScoreRow};
pub(crate) use responsibility::xresp_search;
pub use shapley::{
    characteristic_value, shap_exact, ShapConfig, DEFAULT_EXPECTATION_BUDGET, DEFAULT_FEATURE_CAP,
};

pub const DEFAULT_K: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("{features} features exceed the exact Shap cap of {cap}")]
    FeatureCapExceeded { features: usize, cap: usize },

    #[error("expectation needs {required} entities, budget is {budget}")]
    ExpectationBudgetExceeded { required: u64, budget: u64 },

    #[error("product space of {size} entities exceeds the oracle limit {limit}")]
    OracleSpaceTooLarge { size: u64, limit: u64 },

    #[error("no score selected")]
    NoScoreSelected,
}

/// Contingency `Γ := w̄` (name order) and the flipping value `v'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub contingency: Vec<(usize, usize)>,
    pub flip: usize,
}

impl Witness {
    /// Re-checks the witness: the contingency is made of true changes
    /// that keep the label, and the flip changes it on an entity that
    /// satisfies `constraints`.
    pub fn verify(
        &self,
        schema: &FeatureSchema,
        e: &Entity,
        classifier: &dyn Classifier,
        feature: usize,
        constraints: &[Constraint],
    ) -> Result<bool, EngineError> {
        let original = classifier.classify(e)?;
        let mut c = e.clone();
        for &(f, v) in &self.contingency {
            if f == feature || f >= schema.len() || v >= schema.domain_size(f) || e.value(f) == v {
                return Ok(false);
            }
            c = c.with_value(f, v);
        }
        if self.flip == e.value(feature) || classifier.classify(&c)? != original {
            return Ok(false);
        }
        let x = c.with_value(feature, self.flip);
        let label = classifier.classify(&x)?;
        let ctx = EvalContext {
            original: e,
            counterfactual: &x,
            label: classifier.label(label),
        };
        Ok(label != original && constraints.iter().all(|k| k.eval(&ctx)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord<P> {
    pub feature: usize,
    pub value: P,
    pub witness: Option<Witness>,
    pub contingency_size: Option<usize>,
    /// `false` when the budget cut the search short.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponsibilityConfig {
    /// Largest contingency size searched.
    pub k: usize,
    pub constraints: Vec<Constraint>,
    /// Maximum number of contingency candidates examined.
    pub budget: u64,
    pub parallelism: usize,
    pub strict: bool,
}

impl Default for ResponsibilityConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            constraints: vec![],
            budget: DEFAULT_BUDGET,
            parallelism: 1,
            strict: false,
        }
    }
}

impl ResponsibilityConfig {
    pub fn from_cip(cip: &CipConfig, k: usize) -> Self {
        Self {
            k,
            constraints: cip.constraints.clone(),
            budget: cip.budget,
            parallelism: cip.parallelism,
            strict: cip.strict,
        }
    }
}

pub fn xresp_score<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    cfg: &ResponsibilityConfig,
) -> Result<ScoreRecord<P>, ScoreError> {
    Ok(xresp_search(schema, e, classifier, feature, cfg)?)
}

pub fn resp_score<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    dist: &PopulationDistribution<P>,
    cfg: &ResponsibilityConfig,
) -> Result<ScoreRecord<P>, ScoreError> {
    Ok(responsibility::resp_search(schema, e, classifier, feature, dist, cfg)?)
}

#[cfg(test)]
mod tests;
