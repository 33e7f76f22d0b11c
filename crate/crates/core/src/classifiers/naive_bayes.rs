use std::collections::BTreeMap;

use serde::Deserialize;

use crate::model::{Entity, FeatureSchema};
use crate::scalar::Scalar;

use super::tree::check_classes;
use super::ClassifierError;

const SUM_TOLERANCE: f64 = 1e-9;

/// Categorical naive-Bayes model. `cpt` is indexed `[feature][class][value]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel<P> {
    pub priors: Vec<P>,
    pub cpt: Vec<Vec<Vec<P>>>,
}

impl<P: Scalar> NaiveBayesModel<P> {
    /// Unnormalized joint score `prior(c) * Π_f cpt[f][c][e_f]`.
    pub fn score(&self, class: usize, e: &Entity) -> P {
        self.cpt
            .iter()
            .enumerate()
            .fold(self.priors[class].clone(), |acc, (f, table)| {
                acc * table[class][e.value(f)].clone()
            })
    }

    /// Argmax over classes; the first declared class wins ties.
    pub fn classify(&self, e: &Entity) -> Result<usize, ClassifierError> {
        let mut best: Option<(usize, P)> = None;
        for c in 0..self.priors.len() {
            let s = self.score(c, e);
            match &best {
                Some((_, b)) if s <= *b => {}
                _ => best = Some((c, s)),
            }
        }
        match best {
            Some((c, s)) if s.is_positive() => Ok(c),
            _ => Err(ClassifierError::DegenerateLikelihood),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NaiveBayesDoc {
    classes: Vec<String>,
    priors: BTreeMap<String, f64>,
    cpt: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
}

fn check_distribution(what: impl FnOnce() -> String, probs: &[f64]) -> Result<(), ClassifierError> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(ClassifierError::NegativeProbability(what()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(ClassifierError::ProbabilitySum { what: what(), sum });
    }
    Ok(())
}

/// Parses and validates a naive-Bayes document.
pub fn parse_naive_bayes_document<P: Scalar>(
    source: &str,
    schema: &FeatureSchema,
) -> Result<(NaiveBayesModel<P>, Vec<String>), ClassifierError> {
    let doc: NaiveBayesDoc =
        serde_json::from_str(source).map_err(|e| ClassifierError::Document(e.to_string()))?;
    check_classes(&doc.classes)?;

    for name in doc.priors.keys() {
        if !doc.classes.contains(name) {
            return Err(ClassifierError::InvalidClasses(format!(
                "prior for undeclared class `{name}`"
            )));
        }
    }
    let priors = doc
        .classes
        .iter()
        .map(|c| {
            doc.priors
                .get(c)
                .copied()
                .ok_or_else(|| ClassifierError::MissingRow(format!("prior of class `{c}`")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    check_distribution(|| "priors".into(), &priors)?;

    for name in doc.cpt.keys() {
        if schema.index_of(name).is_none() {
            return Err(ClassifierError::UnknownFeature(name.clone()));
        }
    }
    let mut cpt = Vec::with_capacity(schema.len());
    for feature in schema.features() {
        let table = doc
            .cpt
            .get(&feature.name)
            .ok_or_else(|| ClassifierError::MissingRow(format!("feature `{}`", feature.name)))?;
        for name in table.keys() {
            if !doc.classes.contains(name) {
                return Err(ClassifierError::InvalidClasses(format!(
                    "cpt row for undeclared class `{name}`"
                )));
            }
        }
        let mut rows = Vec::with_capacity(doc.classes.len());
        for class in &doc.classes {
            let row = table.get(class).ok_or_else(|| {
                ClassifierError::MissingRow(format!("`{}` given class `{class}`", feature.name))
            })?;
            for value in row.keys() {
                if feature.value_index(value).is_none() {
                    return Err(ClassifierError::UnknownValue {
                        feature: feature.name.clone(),
                        value: value.clone(),
                    });
                }
            }
            let probs = feature
                .domain
                .iter()
                .map(|v| {
                    row.get(v).copied().ok_or_else(|| {
                        ClassifierError::MissingRow(format!(
                            "`{}`=`{v}` given class `{class}`",
                            feature.name
                        ))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            check_distribution(|| format!("cpt `{}` given class `{class}`", feature.name), &probs)?;
            rows.push(probs.into_iter().map(to_scalar::<P>).collect());
        }
        cpt.push(rows);
    }
    Ok((
        NaiveBayesModel {
            priors: priors.into_iter().map(to_scalar::<P>).collect(),
            cpt,
        },
        doc.classes,
    ))
}

fn to_scalar<P: Scalar>(p: f64) -> P {
    P::from_f64(p).expect("finite probability converts")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_entity, FeatureDef};

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDef::new("City", ["bronx", "brooklyn", "queens"], false),
            FeatureDef::new("Age", ["young", "old"], false),
        ])
        .unwrap()
    }

    fn doc(priors: &str, city_accept: &str) -> String {
        format!(
            r#"{{"classes": ["accept", "reject"], "priors": {priors},
               "cpt": {{
                 "City": {{"accept": {city_accept},
                           "reject": {{"bronx": 0.6, "brooklyn": 0.3, "queens": 0.1}}}},
                 "Age":  {{"accept": {{"young": 0.5, "old": 0.5}},
                           "reject": {{"young": 0.7, "old": 0.3}}}}
               }}}}"#
        )
    }

    const CITY: &str = r#"{"bronx": 0.2, "brooklyn": 0.3, "queens": 0.5}"#;

    #[test]
    fn valid_document() {
        let s = schema();
        let (m, classes) =
            parse_naive_bayes_document::<f64>(&doc(r#"{"accept": 0.5, "reject": 0.5}"#, CITY), &s)
                .unwrap();
        assert_eq!(classes, ["accept", "reject"]);
        let bronx_young = validate_entity(&s, [("City", "bronx"), ("Age", "young")]).unwrap();
        // accept: .5*.2*.5 = .05, reject: .5*.6*.7 = .21
        assert_eq!(m.classify(&bronx_young).unwrap(), 1);
        let queens_old = validate_entity(&s, [("City", "queens"), ("Age", "old")]).unwrap();
        // accept: .5*.5*.5 = .125, reject: .5*.1*.3 = .015
        assert_eq!(m.classify(&queens_old).unwrap(), 0);
    }

    #[test]
    fn priors_must_sum_to_one() {
        let s = schema();
        let err = parse_naive_bayes_document::<f64>(&doc(r#"{"accept": 0.6, "reject": 0.6}"#, CITY), &s)
            .unwrap_err();
        assert!(matches!(err, ClassifierError::ProbabilitySum { .. }));
    }

    #[test]
    fn missing_cpt_value() {
        let s = schema();
        let err = parse_naive_bayes_document::<f64>(
            &doc(r#"{"accept": 0.5, "reject": 0.5}"#, r#"{"bronx": 0.5, "brooklyn": 0.5}"#),
            &s,
        )
        .unwrap_err();
        assert!(matches!(err, ClassifierError::MissingRow(ref m) if m.contains("queens")));
    }

    #[test]
    fn degenerate_prior_always_wins() {
        let s = schema();
        let (m, _) =
            parse_naive_bayes_document::<f64>(&doc(r#"{"accept": 1.0, "reject": 0.0}"#, CITY), &s)
                .unwrap();
        for e in s.entities() {
            assert_eq!(m.classify(&e).unwrap(), 0);
        }
    }

    #[test]
    fn ties_go_to_first_class_and_zero_scores_are_degenerate() {
        let m = NaiveBayesModel::<f64> {
            priors: vec![0.5, 0.5],
            cpt: vec![vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0]]],
        };
        let e = Entity::from_indices(vec![0]);
        assert_eq!(m.classify(&e).unwrap(), 0);
        let z = Entity::from_indices(vec![2]);
        assert_eq!(m.classify(&z), Err(ClassifierError::DegenerateLikelihood));
    }
}
