use crate::classifiers::{classify_parallel, Classifier};
use crate::engine::{check_constraint_classes, satisfies_all, subsets_by_name, worker_pool, EngineError};
use crate::model::{apply_unchecked, Entity, FeatureSchema, Intervention, Interventions, PopulationDistribution};
use crate::scalar::Scalar;
use crate::speclang::EvalContext;

use super::{ResponsibilityConfig, ScoreRecord, Witness};

const CHUNK: usize = 1 << 13;

/// Best qualifying contingency seen so far at the current size.
struct Best<P> {
    mass: P,
    contingency: Intervention,
    flip: usize,
}

/// Shared layered search. With `dist == None` this is x-resp: the first
/// flipping `(contingency, v')` in canonical order wins. With a
/// distribution it is resp: every contingency of the first size with
/// positive flip mass is scored and the maximum kept.
fn layered<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    cfg: &ResponsibilityConfig,
    dist: Option<&PopulationDistribution<P>>,
) -> Result<ScoreRecord<P>, EngineError> {
    if feature >= schema.len() {
        return Err(EngineError::InvalidConfig(format!("feature #{feature} not in schema")));
    }
    if cfg.budget == 0 {
        return Err(EngineError::InvalidConfig("budget must be at least 1".into()));
    }
    check_constraint_classes(&cfg.constraints, classifier)?;
    let pool = worker_pool(cfg.parallelism)?;
    let original = classifier.classify(e)?;
    let alternatives: Vec<usize> = (0..schema.domain_size(feature))
        .filter(|&v| v != e.value(feature))
        .collect();
    let weights: Vec<P> = match dist {
        Some(d) => alternatives
            .iter()
            .map(|&v| d.marginal_probability(feature, v))
            .collect(),
        None => vec![P::one(); alternatives.len()],
    };
    let max_size = cfg.k.min(schema.len().saturating_sub(1));
    let mut visited: u64 = 0;
    let mut exhausted = true;

    let finish = |best: Best<P>, size: usize, exhausted: bool| -> ScoreRecord<P> {
        let denom = P::from_u64(1 + size as u64).expect("small integer");
        ScoreRecord {
            feature,
            value: best.mass / denom,
            witness: Some(Witness {
                contingency: best.contingency.changes().to_vec(),
                flip: best.flip,
            }),
            contingency_size: Some(size),
            exhausted,
        }
    };

    'sizes: for size in 0..=max_size {
        let mut best: Option<Best<P>> = None;
        let mut layer = subsets_by_name(schema, Some(feature), size)
            .flat_map(|subset| Interventions::new(schema, e, subset));
        loop {
            let mut chunk: Vec<Intervention> = layer.by_ref().take(CHUNK).collect();
            if chunk.is_empty() {
                break;
            }
            let room = cfg.budget - visited;
            if chunk.len() as u64 > room {
                if cfg.strict {
                    return Err(EngineError::BudgetExceeded { budget: cfg.budget });
                }
                chunk.truncate(room as usize);
                exhausted = false;
            }
            visited += chunk.len() as u64;

            let contingencies: Vec<Entity> = chunk.iter().map(|iv| apply_unchecked(e, iv)).collect();
            let labels = classify_parallel(classifier, &contingencies, pool.as_ref())?;
            let preserved: Vec<usize> = (0..chunk.len()).filter(|&i| labels[i] == original).collect();
            let contingencies = &contingencies;
            let flipped: Vec<Entity> = preserved
                .iter()
                .flat_map(|&i| {
                    alternatives
                        .iter()
                        .map(move |&v| contingencies[i].with_value(feature, v))
                })
                .collect();
            let flip_labels = classify_parallel(classifier, &flipped, pool.as_ref())?;

            for (p, &i) in preserved.iter().enumerate() {
                let mut mass = P::zero();
                let mut first_flip = None;
                for (a, &v) in alternatives.iter().enumerate() {
                    let idx = p * alternatives.len() + a;
                    let label = flip_labels[idx];
                    if label == original || !weights[a].is_positive() {
                        continue;
                    }
                    let ctx = EvalContext {
                        original: e,
                        counterfactual: &flipped[idx],
                        label: classifier.label(label),
                    };
                    if !satisfies_all(&cfg.constraints, &ctx) {
                        continue;
                    }
                    if dist.is_none() {
                        let best = Best {
                            mass: P::one(),
                            contingency: chunk[i].clone(),
                            flip: v,
                        };
                        return Ok(finish(best, size, exhausted));
                    }
                    first_flip.get_or_insert(v);
                    mass = mass + weights[a].clone();
                }
                if let Some(flip) = first_flip {
                    if best.as_ref().is_none_or(|b| mass > b.mass) {
                        best = Some(Best {
                            mass,
                            contingency: chunk[i].clone(),
                            flip,
                        });
                    }
                }
            }
            if !exhausted {
                if let Some(b) = best {
                    return Ok(finish(b, size, false));
                }
                break 'sizes;
            }
        }
        if let Some(b) = best {
            return Ok(finish(b, size, exhausted));
        }
    }
    Ok(ScoreRecord {
        feature,
        value: P::zero(),
        witness: None,
        contingency_size: None,
        exhausted,
    })
}

pub(crate) fn xresp_search<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    cfg: &ResponsibilityConfig,
) -> Result<ScoreRecord<P>, EngineError> {
    layered::<P>(schema, e, classifier, feature, cfg, None)
}

pub(crate) fn resp_search<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    dist: &PopulationDistribution<P>,
    cfg: &ResponsibilityConfig,
) -> Result<ScoreRecord<P>, EngineError> {
    layered(schema, e, classifier, feature, cfg, Some(dist))
}
