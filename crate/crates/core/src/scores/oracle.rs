use crate::classifiers::Classifier;
use crate::model::{Entity, FeatureSchema};
use crate::scalar::Scalar;
use crate::speclang::{Constraint, EvalContext};

use super::{ScoreError, ScoreRecord, Witness};

pub const ORACLE_SPACE_LIMIT: u64 = 1_000_000;

/// x-resp by exhaustive enumeration of the product space: every entity
/// that differs from `e` on `feature` is read as a flip `v'` on top of the
/// contingency formed by its other differences. No layering, no pruning.
pub fn oracle_xresp<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    k: usize,
    constraints: &[Constraint],
) -> Result<ScoreRecord<P>, ScoreError> {
    if schema.space_size() > ORACLE_SPACE_LIMIT {
        return Err(ScoreError::OracleSpaceTooLarge {
            size: schema.space_size(),
            limit: ORACLE_SPACE_LIMIT,
        });
    }
    if feature >= schema.len() {
        return Err(ScoreError::UnknownFeature(format!("#{feature}")));
    }
    let original = classifier.classify(e).map_err(crate::engine::EngineError::from)?;

    // (size, contingency name ranks, contingency values, flip value)
    type Key = (usize, Vec<usize>, Vec<usize>, usize);
    let mut best: Option<(Key, Witness)> = None;
    for x in schema.entities() {
        if x.value(feature) == e.value(feature) {
            continue;
        }
        let mut gamma: Vec<usize> = e.diff(&x).into_iter().filter(|&f| f != feature).collect();
        if gamma.len() > k {
            continue;
        }
        let contingency = x.with_value(feature, e.value(feature));
        let cl = classifier.classify(&contingency).map_err(crate::engine::EngineError::from)?;
        if cl != original {
            continue;
        }
        let xl = classifier.classify(&x).map_err(crate::engine::EngineError::from)?;
        if xl == original {
            continue;
        }
        let ctx = EvalContext {
            original: e,
            counterfactual: &x,
            label: classifier.label(xl),
        };
        if !constraints.iter().all(|c| c.eval(&ctx)) {
            continue;
        }
        gamma.sort_by_key(|&f| schema.name_rank(f));
        let key: Key = (
            gamma.len(),
            gamma.iter().map(|&f| schema.name_rank(f)).collect(),
            gamma.iter().map(|&f| x.value(f)).collect(),
            x.value(feature),
        );
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            let witness = Witness {
                contingency: gamma.iter().map(|&f| (f, x.value(f))).collect(),
                flip: x.value(feature),
            };
            best = Some((key, witness));
        }
    }
    Ok(match best {
        Some((key, witness)) => ScoreRecord {
            feature,
            value: P::from_ratio(1, 1 + key.0 as u64),
            witness: Some(witness),
            contingency_size: Some(key.0),
            exhausted: true,
        },
        None => ScoreRecord {
            feature,
            value: P::zero(),
            witness: None,
            contingency_size: None,
            exhausted: true,
        },
    })
}
