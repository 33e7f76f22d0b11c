use crate::classifiers::{classify_parallel, Classifier};
use crate::engine::{worker_pool, EngineError};
use crate::model::{Entity, FeatureSchema, PopulationDistribution};
use crate::scalar::Scalar;

use super::{ScoreError, ScoreRecord};

pub const DEFAULT_FEATURE_CAP: usize = 16;
pub const DEFAULT_EXPECTATION_BUDGET: u64 = 10_000_000;

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapConfig<P> {
    pub distribution: PopulationDistribution<P>,
    /// Class whose indicator is the payoff; `None` means the original label.
    pub payoff_class: Option<String>,
    pub feature_cap: usize,
    /// Maximum entities averaged for one characteristic value.
    pub expectation_budget: u64,
    pub parallelism: usize,
}

impl<P: Scalar> ShapConfig<P> {
    pub fn new(distribution: PopulationDistribution<P>) -> Self {
        Self {
            distribution,
            payoff_class: None,
            feature_cap: DEFAULT_FEATURE_CAP,
            expectation_budget: DEFAULT_EXPECTATION_BUDGET,
            parallelism: 1,
        }
    }
}

fn payoff_class<P>(
    classifier: &dyn Classifier,
    e: &Entity,
    cfg: &ShapConfig<P>,
) -> Result<usize, ScoreError> {
    match &cfg.payoff_class {
        Some(c) => classifier
            .class_index(c)
            .ok_or_else(|| EngineError::UnknownClass(c.clone()).into()),
        None => Ok(classifier.classify(e).map_err(EngineError::from)?),
    }
}

/// Weighted payoff mass of `entities`.
fn payoff_mass<P: Scalar>(
    classifier: &dyn Classifier,
    entities: &[Entity],
    weights: &[P],
    payoff: usize,
    pool: Option<&rayon::ThreadPool>,
) -> Result<P, ScoreError> {
    let labels = classify_parallel(classifier, entities, pool).map_err(EngineError::from)?;
    Ok(labels
        .iter()
        .zip(weights)
        .filter(|(l, _)| **l == payoff)
        .fold(P::zero(), |acc, (_, w)| acc + w.clone()))
}

fn expectation<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    fixed: &[bool],
    cfg: &ShapConfig<P>,
    payoff: usize,
    pool: Option<&rayon::ThreadPool>,
) -> Result<P, ScoreError> {
    match &cfg.distribution {
        PopulationDistribution::Product { marginals } => {
            // free features range over their positive-probability values
            let free: Vec<(usize, Vec<usize>)> = (0..schema.len())
                .filter(|&f| !fixed[f])
                .map(|f| {
                    let support = (0..schema.domain_size(f))
                        .filter(|&v| marginals[f][v].is_positive())
                        .collect();
                    (f, support)
                })
                .collect();
            let size = free
                .iter()
                .try_fold(1u64, |acc, (_, s)| acc.checked_mul(s.len() as u64))
                .unwrap_or(u64::MAX);
            if size > cfg.expectation_budget {
                return Err(ScoreError::ExpectationBudgetExceeded {
                    required: size,
                    budget: cfg.expectation_budget,
                });
            }
            if size == 0 {
                return Ok(P::zero());
            }
            let mut total = P::zero();
            let mut cursor = vec![0usize; free.len()];
            let mut entities = Vec::with_capacity(CHUNK.min(size as usize));
            let mut weights = Vec::with_capacity(entities.capacity());
            let mut done = false;
            while !done {
                let mut x = e.clone();
                let mut w = P::one();
                for ((f, support), &i) in free.iter().zip(&cursor) {
                    x = x.with_value(*f, support[i]);
                    w = w * marginals[*f][support[i]].clone();
                }
                entities.push(x);
                weights.push(w);
                done = true;
                for pos in (0..cursor.len()).rev() {
                    cursor[pos] += 1;
                    if cursor[pos] < free[pos].1.len() {
                        done = false;
                        break;
                    }
                    cursor[pos] = 0;
                }
                if entities.len() >= CHUNK || done {
                    total = total + payoff_mass(classifier, &entities, &weights, payoff, pool)?;
                    entities.clear();
                    weights.clear();
                }
            }
            Ok(total)
        }
        PopulationDistribution::Empirical {
            rows,
            weights,
            total,
        } => {
            if rows.len() as u64 > cfg.expectation_budget {
                return Err(ScoreError::ExpectationBudgetExceeded {
                    required: rows.len() as u64,
                    budget: cfg.expectation_budget,
                });
            }
            let entities: Vec<Entity> = rows
                .iter()
                .map(|r| {
                    let mut x = r.clone();
                    for f in (0..schema.len()).filter(|&f| fixed[f]) {
                        x = x.with_value(f, e.value(f));
                    }
                    x
                })
                .collect();
            let mass = payoff_mass(classifier, &entities, weights, payoff, pool)?;
            Ok(mass / total.clone())
        }
    }
}

/// `v(S)`: expected payoff when the features in `subset` are fixed to the
/// entity's values and the rest are drawn from the distribution.
pub fn characteristic_value<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    subset: &[usize],
    cfg: &ShapConfig<P>,
) -> Result<P, ScoreError> {
    let mut fixed = vec![false; schema.len()];
    for &f in subset {
        if f >= schema.len() {
            return Err(ScoreError::UnknownFeature(format!("#{f}")));
        }
        fixed[f] = true;
    }
    let payoff = payoff_class(classifier, e, cfg)?;
    let pool = worker_pool(cfg.parallelism)?;
    expectation(schema, e, classifier, &fixed, cfg, payoff, pool.as_ref())
}

fn factorials(n: usize) -> Vec<u64> {
    let mut out = vec![1u64; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] * i as u64;
    }
    out
}

/// Exact Shapley values by enumerating all `2^n` coalitions.
pub fn shap_exact<P: Scalar>(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    cfg: &ShapConfig<P>,
) -> Result<Vec<ScoreRecord<P>>, ScoreError> {
    let n = schema.len();
    if n > cfg.feature_cap || n > 20 {
        return Err(ScoreError::FeatureCapExceeded {
            features: n,
            cap: cfg.feature_cap.min(20),
        });
    }
    let payoff = payoff_class(classifier, e, cfg)?;
    let pool = worker_pool(cfg.parallelism)?;
    let coalitions = 1usize << n;
    let mut values: Vec<P> = Vec::with_capacity(coalitions);
    for mask in 0..coalitions {
        let fixed: Vec<bool> = (0..n).map(|f| mask & (1 << f) != 0).collect();
        values.push(expectation(schema, e, classifier, &fixed, cfg, payoff, pool.as_ref())?);
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let fact = factorials(n);
    let weights: Vec<P> = (0..n)
        .map(|s| P::from_ratio(fact[s] * fact[n - s - 1], fact[n]))
        .collect();
    Ok((0..n)
        .map(|f| {
            let bit = 1usize << f;
            let value = (0..coalitions)
                .filter(|mask| mask & bit == 0)
                .fold(P::zero(), |acc, mask| {
                    let s = mask.count_ones() as usize;
                    acc + weights[s].clone() * (values[mask | bit].clone() - values[mask].clone())
                });
            ScoreRecord {
                feature: f,
                value,
                witness: None,
                contingency_size: None,
                exhausted: true,
            }
        })
        .collect())
}
