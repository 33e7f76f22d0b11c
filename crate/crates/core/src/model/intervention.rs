use std::cmp::Ordering;
use std::fmt;

use super::{Entity, FeatureSchema, ModelError};

/// A set of true value changes. Changes are kept sorted by feature *name*
/// so that the derived canonical order matches the textual one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Intervention {
    changes: Vec<(usize, usize)>,
}

impl Intervention {
    pub fn empty() -> Self {
        Self { changes: vec![] }
    }

    /// Validates `(feature, value)` changes against `base`: distinct
    /// features, in-domain values that differ from the base value.
    pub fn new(
        schema: &FeatureSchema,
        base: &Entity,
        changes: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ModelError> {
        let mut changes: Vec<_> = changes.into_iter().collect();
        for (i, &(f, v)) in changes.iter().enumerate() {
            if f >= schema.len() {
                return Err(ModelError::InvalidIntervention(format!(
                    "feature #{f} not in schema"
                )));
            }
            let name = &schema.feature(f).name;
            if changes[..i].iter().any(|&(g, _)| g == f) {
                return Err(ModelError::InvalidIntervention(format!(
                    "feature `{name}` changed more than once"
                )));
            }
            if v >= schema.domain_size(f) {
                return Err(ModelError::InvalidIntervention(format!(
                    "value #{v} not in domain of `{name}`"
                )));
            }
            if base.value(f) == v {
                return Err(ModelError::InvalidIntervention(format!(
                    "`{name}` := `{}` is not a change",
                    schema.value_name(f, v)
                )));
            }
        }
        changes.sort_by_key(|&(f, _)| schema.name_rank(f));
        Ok(Self { changes })
    }

    /// Like [`Intervention::new`] but with name/value tokens.
    pub fn from_tokens<K: AsRef<str>, V: AsRef<str>>(
        schema: &FeatureSchema,
        base: &Entity,
        changes: impl IntoIterator<Item = (K, V)>,
    ) -> Result<Self, ModelError> {
        let mut resolved = Vec::new();
        for (name, value) in changes {
            let (name, value) = (name.as_ref(), value.as_ref());
            let f = schema.index_of(name).ok_or_else(|| {
                ModelError::InvalidIntervention(format!("unknown feature `{name}`"))
            })?;
            let v = schema.feature(f).value_index(value).ok_or_else(|| {
                ModelError::InvalidIntervention(format!("`{value}` not in domain of `{name}`"))
            })?;
            resolved.push((f, v));
        }
        Self::new(schema, base, resolved)
    }

    /// Caller guarantees validity and name-rank order.
    pub(crate) fn from_sorted_unchecked(changes: Vec<(usize, usize)>) -> Self {
        Self { changes }
    }

    pub fn changes(&self) -> &[(usize, usize)] {
        &self.changes
    }

    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    /// Changed features, in name order.
    pub fn features(&self) -> Vec<usize> {
        self.changes.iter().map(|&(f, _)| f).collect()
    }

    pub fn changes_feature(&self, feature: usize) -> bool {
        self.changes.iter().any(|&(f, _)| f == feature)
    }

    /// Canonical order: size, then feature names, then value positions.
    pub fn canonical_cmp(&self, other: &Self, schema: &FeatureSchema) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| {
                let a = self.changes.iter().map(|&(f, _)| schema.name_rank(f));
                let b = other.changes.iter().map(|&(f, _)| schema.name_rank(f));
                a.cmp(b)
            })
            .then_with(|| {
                let a = self.changes.iter().map(|&(_, v)| v);
                let b = other.changes.iter().map(|&(_, v)| v);
                a.cmp(b)
            })
    }

    pub fn display<'a>(&'a self, schema: &'a FeatureSchema) -> impl fmt::Display + 'a {
        DisplayIntervention {
            iv: self,
            schema,
        }
    }
}

struct DisplayIntervention<'a> {
    iv: &'a Intervention,
    schema: &'a FeatureSchema,
}

impl fmt::Display for DisplayIntervention<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, &(feat, v)) in self.iv.changes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(
                f,
                "{}->{}",
                self.schema.feature(feat).name,
                self.schema.value_name(feat, v)
            )?;
        }
        f.write_str("}")
    }
}

/// Applies `iv` to `e`, re-validating that every change is a real change
/// with respect to `e`.
pub fn apply_intervention(
    schema: &FeatureSchema,
    e: &Entity,
    iv: &Intervention,
) -> Result<Entity, ModelError> {
    Intervention::new(schema, e, iv.changes.iter().copied())?;
    Ok(apply_unchecked(e, iv))
}

pub(crate) fn apply_unchecked(e: &Entity, iv: &Intervention) -> Entity {
    let mut out = e.clone();
    for &(f, v) in &iv.changes {
        out.set(f, v);
    }
    out
}

/// `Π (|dom_f| - 1)` over `subset`, or `None` on overflow.
pub fn intervention_count(schema: &FeatureSchema, subset: &[usize]) -> Option<u64> {
    subset.iter().try_fold(1u64, |acc, &f| {
        acc.checked_mul(schema.domain_size(f) as u64 - 1)
    })
}

/// Every intervention that changes exactly the features in `subset`, in
/// lexicographic order of (feature name, domain position).
pub fn enumerate_interventions(
    schema: &FeatureSchema,
    e: &Entity,
    subset: &[usize],
    budget: u64,
) -> Result<Interventions, ModelError> {
    let mut features: Vec<usize> = subset.to_vec();
    for &f in &features {
        if f >= schema.len() {
            return Err(ModelError::InvalidIntervention(format!(
                "feature #{f} not in schema"
            )));
        }
    }
    features.sort_by_key(|&f| schema.name_rank(f));
    features.dedup();
    let required = intervention_count(schema, &features).unwrap_or(u64::MAX);
    if required > budget {
        return Err(ModelError::BudgetExceeded { required, budget });
    }
    Ok(Interventions::new(schema, e, features))
}

/// Odometer over non-original values of a fixed feature subset.
pub struct Interventions {
    // per feature (name order): the candidate replacement values
    choices: Vec<(usize, Vec<usize>)>,
    cursor: Option<Vec<usize>>,
    remaining: u64,
}

impl Interventions {
    pub(crate) fn new(schema: &FeatureSchema, e: &Entity, features: Vec<usize>) -> Self {
        let choices: Vec<(usize, Vec<usize>)> = features
            .iter()
            .map(|&f| {
                let alts = (0..schema.domain_size(f))
                    .filter(|&v| v != e.value(f))
                    .collect();
                (f, alts)
            })
            .collect();
        let remaining = choices
            .iter()
            .map(|(_, alts)| alts.len() as u64)
            .product();
        let cursor = (remaining > 0).then(|| vec![0; choices.len()]);
        Self {
            choices,
            cursor,
            remaining,
        }
    }
}

impl Iterator for Interventions {
    type Item = Intervention;

    fn next(&mut self) -> Option<Intervention> {
        let cursor = self.cursor.as_mut()?;
        let iv = Intervention::from_sorted_unchecked(
            self.choices
                .iter()
                .zip(cursor.iter())
                .map(|((f, alts), &i)| (*f, alts[i]))
                .collect(),
        );
        let mut pos = cursor.len();
        let mut advanced = false;
        while pos > 0 {
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < self.choices[pos].1.len() {
                advanced = true;
                break;
            }
            cursor[pos] = 0;
        }
        if !advanced {
            self.cursor = None;
        }
        self.remaining -= 1;
        Some(iv)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// An admissible counterfactual version of a base entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterfactualModel {
    pub intervention: Intervention,
    pub result: Entity,
    pub label: String,
}

impl CounterfactualModel {
    /// Changed features, in name order.
    pub fn changed(&self) -> Vec<usize> {
        self.intervention.features()
    }

    pub fn size(&self) -> usize {
        self.intervention.len()
    }
}
