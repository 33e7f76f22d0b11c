use std::fmt;
use std::str::FromStr;

use crate::classifiers::Classifier;
use crate::engine::{minimal_counterfactuals, CipConfig};
use crate::model::{Entity, FeatureSchema, PopulationDistribution};
use crate::scalar::Scalar;

use super::{
    resp_score, shap_exact, xresp_score, ResponsibilityConfig, ScoreError, ScoreRecord, ShapConfig,
    DEFAULT_EXPECTATION_BUDGET, DEFAULT_FEATURE_CAP, DEFAULT_K,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScoreKind {
    Xresp,
    Resp,
    Shap,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 3] = [Self::Xresp, Self::Resp, Self::Shap];
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Xresp => "xresp",
            Self::Resp => "resp",
            Self::Shap => "shap",
        })
    }
}

impl FromStr for ScoreKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "xresp" => Ok(Self::Xresp),
            "resp" => Ok(Self::Resp),
            "shap" => Ok(Self::Shap),
            other => Err(format!("unknown score `{other}` (xresp|resp|shap|all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions<P> {
    pub scores: Vec<ScoreKind>,
    pub k: usize,
    pub distribution: PopulationDistribution<P>,
    /// Constraints, budget and parallelism; also drives the minimal
    /// counterfactual count.
    pub cip: CipConfig,
    pub feature_cap: usize,
    pub expectation_budget: u64,
}

impl<P: Scalar> ReportOptions<P> {
    pub fn new(scores: Vec<ScoreKind>, distribution: PopulationDistribution<P>) -> Self {
        Self {
            scores,
            k: DEFAULT_K,
            distribution,
            cip: CipConfig::default(),
            feature_cap: DEFAULT_FEATURE_CAP,
            expectation_budget: DEFAULT_EXPECTATION_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow<P> {
    pub feature: usize,
    pub xresp: Option<ScoreRecord<P>>,
    pub resp: Option<ScoreRecord<P>>,
    pub shap: Option<ScoreRecord<P>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport<P> {
    pub original_label: String,
    pub scores: Vec<ScoreKind>,
    /// Size and number of minimal counterfactuals.
    pub minimal_size: Option<usize>,
    pub minimal_count: usize,
    pub minimal_exhausted: bool,
    /// One row per feature, schema order.
    pub rows: Vec<ScoreRow<P>>,
}

pub fn score_report<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    options: &ReportOptions<P>,
) -> Result<ScoreReport<P>, ScoreError> {
    let mut kinds = options.scores.clone();
    kinds.sort();
    kinds.dedup();
    if kinds.is_empty() {
        return Err(ScoreError::NoScoreSelected);
    }
    let minimal = minimal_counterfactuals(schema, e, classifier, &options.cip)?;
    let rcfg = ResponsibilityConfig::from_cip(&options.cip, options.k);

    let shap: Vec<Option<ScoreRecord<P>>> = if kinds.contains(&ScoreKind::Shap) {
        let cfg = ShapConfig {
            distribution: options.distribution.clone(),
            payoff_class: None,
            feature_cap: options.feature_cap,
            expectation_budget: options.expectation_budget,
            parallelism: options.cip.parallelism,
        };
        shap_exact(schema, e, classifier, &cfg)?.into_iter().map(Some).collect()
    } else {
        vec![None; schema.len()]
    };

    let mut rows = Vec::with_capacity(schema.len());
    for (f, shap) in shap.into_iter().enumerate() {
        let xresp = match kinds.contains(&ScoreKind::Xresp) {
            true => Some(xresp_score(schema, e, classifier, f, &rcfg)?),
            false => None,
        };
        let resp = match kinds.contains(&ScoreKind::Resp) {
            true => Some(resp_score(schema, e, classifier, f, &options.distribution, &rcfg)?),
            false => None,
        };
        rows.push(ScoreRow {
            feature: f,
            xresp,
            resp,
            shap,
        });
    }
    Ok(ScoreReport {
        original_label: minimal.original_label.clone(),
        scores: kinds,
        minimal_size: minimal.min_size(),
        minimal_count: minimal
            .models
            .iter()
            .filter(|m| Some(m.size()) == minimal.min_size())
            .count(),
        minimal_exhausted: minimal.exhausted,
        rows,
    })
}
