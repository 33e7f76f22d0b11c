use std::collections::HashSet;
use std::fmt;

use super::{FeatureSchema, ModelError};

/// A full assignment of values to a schema's features, stored as domain
/// positions in schema order. The vector is also the canonical key used
/// for memoization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entity(Vec<usize>);

/// One reason a raw assignment is not a valid entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntityViolation {
    Missing { feature: String },
    Extra { feature: String },
    Duplicate { feature: String },
    OutOfDomain { feature: String, value: String },
}

impl fmt::Display for EntityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Missing { feature } => write!(f, "{feature}: missing"),
            Self::Extra { feature } => write!(f, "{feature}: unknown feature"),
            Self::Duplicate { feature } => write!(f, "{feature}: assigned more than once"),
            Self::OutOfDomain { feature, value } => {
                write!(f, "{feature}: value not in domain (`{value}`)")
            }
        }
    }
}

impl Entity {
    pub(crate) fn from_indices(values: Vec<usize>) -> Self {
        Self(values)
    }

    /// Builds an entity from domain positions, checking arity and bounds.
    pub fn from_values(schema: &FeatureSchema, values: Vec<usize>) -> Result<Self, ModelError> {
        if values.len() != schema.len() {
            return Err(ModelError::InvalidEntity(vec![]));
        }
        let violations: Vec<_> = values
            .iter()
            .enumerate()
            .filter(|&(f, &v)| v >= schema.domain_size(f))
            .map(|(f, &v)| EntityViolation::OutOfDomain {
                feature: schema.feature(f).name.clone(),
                value: format!("#{v}"),
            })
            .collect();
        if violations.is_empty() {
            Ok(Self(values))
        } else {
            Err(ModelError::InvalidEntity(violations))
        }
    }

    pub fn value(&self, feature: usize) -> usize {
        self.0[feature]
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn with_value(&self, feature: usize, value: usize) -> Self {
        let mut values = self.0.clone();
        values[feature] = value;
        Self(values)
    }

    pub(crate) fn set(&mut self, feature: usize, value: usize) {
        self.0[feature] = value;
    }

    /// Features (schema indices, ascending) on which the two entities differ.
    pub fn diff(&self, other: &Entity) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(f, _)| f)
            .collect()
    }

    /// `(feature name, value token)` pairs in schema order.
    pub fn tokens<'s>(&self, schema: &'s FeatureSchema) -> Vec<(&'s str, &'s str)> {
        self.0
            .iter()
            .enumerate()
            .map(|(f, &v)| (schema.feature(f).name.as_str(), schema.value_name(f, v)))
            .collect()
    }

    pub fn display<'a>(&'a self, schema: &'a FeatureSchema) -> impl fmt::Display + 'a {
        DisplayEntity { entity: self, schema }
    }
}

struct DisplayEntity<'a> {
    entity: &'a Entity,
    schema: &'a FeatureSchema,
}

impl fmt::Display for DisplayEntity<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (name, value)) in self.entity.tokens(self.schema).into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        f.write_str(")")
    }
}

/// Checks a raw name→value assignment against the schema, reporting every
/// violation rather than stopping at the first.
pub fn validate_entity<K, V>(
    schema: &FeatureSchema,
    raw: impl IntoIterator<Item = (K, V)>,
) -> Result<Entity, Vec<EntityViolation>>
where
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut values: Vec<Option<usize>> = vec![None; schema.len()];
    let mut seen = HashSet::new();
    let mut extras = Vec::new();
    let mut out_of_domain: Vec<(usize, EntityViolation)> = Vec::new();
    for (name, value) in raw {
        let (name, value) = (name.as_ref(), value.as_ref());
        let Some(f) = schema.index_of(name) else {
            extras.push(EntityViolation::Extra {
                feature: name.to_owned(),
            });
            continue;
        };
        if !seen.insert(f) {
            extras.push(EntityViolation::Duplicate {
                feature: name.to_owned(),
            });
            continue;
        }
        match schema.feature(f).value_index(value) {
            Some(v) => values[f] = Some(v),
            None => out_of_domain.push((
                f,
                EntityViolation::OutOfDomain {
                    feature: name.to_owned(),
                    value: value.to_owned(),
                },
            )),
        }
    }
    let mut violations = Vec::new();
    for f in 0..schema.len() {
        if let Some((_, v)) = out_of_domain.iter().find(|(g, _)| *g == f) {
            violations.push(v.clone());
        } else if !seen.contains(&f) {
            violations.push(EntityViolation::Missing {
                feature: schema.feature(f).name.clone(),
            });
        }
    }
    violations.extend(extras);
    if violations.is_empty() {
        Ok(Entity(values.into_iter().map(Option::unwrap).collect()))
    } else {
        Err(violations)
    }
}
