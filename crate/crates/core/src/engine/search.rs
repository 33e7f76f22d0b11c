use itertools::Itertools;

use crate::classifiers::{classify_parallel, Classifier};
use crate::model::{
    apply_unchecked, intervention_count, CounterfactualModel, Entity, FeatureSchema, Intervention,
    Interventions,
};
use crate::speclang::{Constraint, EvalContext};

use super::{CipConfig, EngineError, Minimality, ModelSet};

/// Candidates classified per round trip.
const CHUNK: usize = 1 << 14;

pub(crate) fn worker_pool(parallelism: usize) -> Result<Option<rayon::ThreadPool>, EngineError> {
    match parallelism {
        0 => Err(EngineError::InvalidConfig("parallelism must be at least 1".into())),
        1 => Ok(None),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(Some)
            .map_err(|e| EngineError::InvalidConfig(format!("worker pool: {e}"))),
    }
}

/// Rejects constraints that mention classes the classifier does not have.
pub(crate) fn check_constraint_classes(
    constraints: &[Constraint],
    classifier: &dyn Classifier,
) -> Result<(), EngineError> {
    for c in constraints {
        for class in c.label_classes() {
            if classifier.class_index(class).is_none() {
                return Err(EngineError::UnknownClass(class.to_owned()));
            }
        }
    }
    Ok(())
}

pub(crate) fn satisfies_all(constraints: &[Constraint], ctx: &EvalContext<'_>) -> bool {
    constraints.iter().all(|c| c.eval(ctx))
}

/// Feature subsets of a given size, lexicographic in feature-name order.
pub(crate) fn subsets_by_name(
    schema: &FeatureSchema,
    exclude: Option<usize>,
    size: usize,
) -> impl Iterator<Item = Vec<usize>> + '_ {
    schema
        .name_order()
        .iter()
        .copied()
        .filter(move |f| Some(*f) != exclude)
        .combinations(size)
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|f| big.contains(f))
}

/// Size-layered search over interventions. Layers are visited in
/// ascending size; each layer is enumerated in canonical order, so the
/// collected models come out canonically ordered without a sort.
pub(crate) fn search(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    cfg: &CipConfig,
    minimality: Minimality,
) -> Result<ModelSet, EngineError> {
    cfg.validate()?;
    check_constraint_classes(&cfg.constraints, classifier)?;
    let original_label = classifier.classify(e)?;
    let target = match &cfg.target {
        Some(t) => {
            let t = classifier
                .class_index(t)
                .ok_or_else(|| EngineError::UnknownClass(t.clone()))?;
            if t == original_label {
                return Err(EngineError::InvalidTarget(classifier.label(t).to_owned()));
            }
            Some(t)
        }
        None => None,
    };
    let admissible_label = |label: usize| match target {
        Some(t) => label == t,
        None => label != original_label,
    };
    let pool = worker_pool(cfg.parallelism)?;
    let max_changes = cfg.max_changes.unwrap_or(schema.len()).min(schema.len());

    let mut set = ModelSet {
        original: e.clone(),
        original_label: classifier.label(original_label).to_owned(),
        classes: classifier.classes().to_vec(),
        models: Vec::new(),
        exhausted: true,
        minimality,
        visited: 0,
    };
    let mut supporting: Vec<Vec<usize>> = Vec::new();

    'layers: for size in 1..=max_changes {
        let mut layer_support: Vec<Vec<usize>> = Vec::new();
        let mut pending: Vec<Intervention> = Vec::new();
        let mut truncated = false;

        let flush = |pending: &mut Vec<Intervention>,
                         set: &mut ModelSet,
                         layer_support: &mut Vec<Vec<usize>>|
         -> Result<(), EngineError> {
            if pending.is_empty() {
                return Ok(());
            }
            let results: Vec<Entity> = pending.iter().map(|iv| apply_unchecked(e, iv)).collect();
            let labels = classify_parallel(classifier, &results, pool.as_ref())?;
            for ((iv, result), label) in pending.drain(..).zip(results).zip(labels) {
                if !admissible_label(label) {
                    continue;
                }
                let label = classifier.label(label);
                let ctx = EvalContext {
                    original: e,
                    counterfactual: &result,
                    label,
                };
                if !satisfies_all(&cfg.constraints, &ctx) {
                    continue;
                }
                let changed = iv.features();
                if layer_support.last() != Some(&changed) {
                    layer_support.push(changed);
                }
                set.models.push(CounterfactualModel {
                    intervention: iv,
                    result,
                    label: label.to_owned(),
                });
            }
            Ok(())
        };

        for subset in subsets_by_name(schema, None, size) {
            if minimality == Minimality::Subset
                && supporting.iter().any(|s| is_subset(s, &subset))
            {
                continue;
            }
            let count = intervention_count(schema, &subset).unwrap_or(u64::MAX);
            let room = cfg.budget - set.visited;
            let take = if count > room {
                if cfg.strict {
                    return Err(EngineError::BudgetExceeded { budget: cfg.budget });
                }
                truncated = true;
                room
            } else {
                count
            };
            for iv in Interventions::new(schema, e, subset).take(take as usize) {
                pending.push(iv);
                if pending.len() >= CHUNK {
                    flush(&mut pending, &mut set, &mut layer_support)?;
                }
            }
            set.visited += take;
            if truncated {
                break;
            }
        }
        flush(&mut pending, &mut set, &mut layer_support)?;

        if truncated {
            set.exhausted = false;
            break 'layers;
        }
        let found = !layer_support.is_empty();
        supporting.extend(layer_support);
        if minimality == Minimality::Cardinality && found {
            break;
        }
    }
    Ok(set)
}
