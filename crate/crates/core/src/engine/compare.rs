use std::collections::BTreeSet;

use crate::classifiers::Classifier;
use crate::model::{Entity, FeatureSchema};
use crate::scores::{xresp_search, ResponsibilityConfig};

use super::{minimal_counterfactuals, CipConfig, EngineError, ModelSet};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureComparison {
    pub feature: usize,
    pub xresp_a: f64,
    pub xresp_b: f64,
    /// `xresp_b - xresp_a`
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub label_a: String,
    pub label_b: String,
    pub models_a: ModelSet,
    pub models_b: ModelSet,
    /// Changed-sets of minimal models found only under `a` (resp. `b`).
    pub only_a: Vec<Vec<usize>>,
    pub only_b: Vec<Vec<usize>>,
    /// Per-feature x-resp, schema order.
    pub features: Vec<FeatureComparison>,
}

impl ComparisonReport {
    pub fn a_admits_none(&self) -> bool {
        self.models_a.is_empty()
    }

    pub fn b_admits_none(&self) -> bool {
        self.models_b.is_empty()
    }

    /// No difference in labels, changed-sets or scores.
    pub fn is_identical(&self) -> bool {
        self.label_a == self.label_b
            && self.only_a.is_empty()
            && self.only_b.is_empty()
            && self.features.iter().all(|f| f.delta == 0.0)
    }
}

/// Runs both classifiers through the same minimal-counterfactual search
/// and x-resp (contingency sizes up to `k`) and reports the differences.
pub fn compare_classifiers(
    schema: &FeatureSchema,
    e: &Entity,
    a: &dyn Classifier,
    b: &dyn Classifier,
    cfg: &CipConfig,
    k: usize,
) -> Result<ComparisonReport, EngineError> {
    let set_a: BTreeSet<&String> = a.classes().iter().collect();
    let set_b: BTreeSet<&String> = b.classes().iter().collect();
    if set_a != set_b {
        return Err(EngineError::ClassMismatch {
            a: a.classes().to_vec(),
            b: b.classes().to_vec(),
        });
    }
    let models_a = minimal_counterfactuals(schema, e, a, cfg)?;
    let models_b = minimal_counterfactuals(schema, e, b, cfg)?;
    let sets_a = models_a.changed_sets();
    let sets_b = models_b.changed_sets();
    let only_a = sets_a.iter().filter(|s| !sets_b.contains(s)).cloned().collect();
    let only_b = sets_b.iter().filter(|s| !sets_a.contains(s)).cloned().collect();

    let rcfg = ResponsibilityConfig {
        k,
        constraints: cfg.constraints.clone(),
        budget: cfg.budget,
        parallelism: cfg.parallelism,
        strict: cfg.strict,
    };
    let mut features = Vec::with_capacity(schema.len());
    for f in 0..schema.len() {
        let xa: f64 = xresp_search(schema, e, a, f, &rcfg)?.value;
        let xb: f64 = xresp_search(schema, e, b, f, &rcfg)?.value;
        features.push(FeatureComparison {
            feature: f,
            xresp_a: xa,
            xresp_b: xb,
            delta: xb - xa,
        });
    }
    Ok(ComparisonReport {
        label_a: models_a.original_label.clone(),
        label_b: models_b.original_label.clone(),
        models_a,
        models_b,
        only_a,
        only_b,
        features,
    })
}
