use std::collections::HashMap;

use super::{Entity, ModelError};

/// A named finite categorical feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDef {
    pub name: String,
    pub domain: Vec<String>,
    /// Domain order is meaningful (enables `only_increase` / `only_decrease`).
    pub ordered: bool,
}

impl FeatureDef {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        domain: impl IntoIterator<Item = S>,
        ordered: bool,
    ) -> Self {
        Self {
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
            ordered,
        }
    }

    pub fn value_index(&self, token: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == token)
    }
}

/// Ordered list of features. Feature identity inside the crate is the
/// position in this list; values are positions in the feature's domain.
#[derive(Debug, Clone)]
pub struct FeatureSchema {
    features: Vec<FeatureDef>,
    by_name: HashMap<String, usize>,
    // feature indices sorted by name, and the inverse permutation
    name_order: Vec<usize>,
    name_rank: Vec<usize>,
    space_size: u64,
}

impl PartialEq for FeatureSchema {
    fn eq(&self, other: &Self) -> bool {
        self.features == other.features
    }
}

impl Eq for FeatureSchema {}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self, ModelError> {
        let mut by_name = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if f.name.is_empty() {
                return Err(ModelError::InvalidSchema(format!(
                    "feature #{i} has an empty name"
                )));
            }
            if by_name.insert(f.name.clone(), i).is_some() {
                return Err(ModelError::InvalidSchema(format!(
                    "duplicate feature `{}`",
                    f.name
                )));
            }
            if f.domain.is_empty() {
                return Err(ModelError::InvalidSchema(format!(
                    "feature `{}` has an empty domain",
                    f.name
                )));
            }
            for (j, v) in f.domain.iter().enumerate() {
                if f.domain[..j].contains(v) {
                    return Err(ModelError::InvalidSchema(format!(
                        "feature `{}` repeats value `{v}`",
                        f.name
                    )));
                }
            }
        }
        let mut space_size: u64 = 1;
        for f in &features {
            space_size = space_size
                .checked_mul(f.domain.len() as u64)
                .filter(|n| *n <= i64::MAX as u64)
                .ok_or(ModelError::SpaceTooLarge)?;
        }
        let mut name_order: Vec<usize> = (0..features.len()).collect();
        name_order.sort_by(|&a, &b| features[a].name.cmp(&features[b].name));
        let mut name_rank = vec![0; features.len()];
        for (rank, &f) in name_order.iter().enumerate() {
            name_rank[f] = rank;
        }
        Ok(Self {
            features,
            by_name,
            name_order,
            name_rank,
            space_size,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &FeatureDef {
        &self.features[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn domain_size(&self, feature: usize) -> usize {
        self.features[feature].domain.len()
    }

    pub fn value_name(&self, feature: usize, value: usize) -> &str {
        &self.features[feature].domain[value]
    }

    /// Number of entities in the full product space (at most 2^63-1).
    pub fn space_size(&self) -> u64 {
        self.space_size
    }

    /// Feature indices sorted by feature name.
    pub fn name_order(&self) -> &[usize] {
        &self.name_order
    }

    pub fn name_rank(&self, feature: usize) -> usize {
        self.name_rank[feature]
    }

    /// Iterates the full product space in schema order (last feature fastest).
    pub fn entities(&self) -> ProductSpace<'_> {
        ProductSpace {
            schema: self,
            next: Some(vec![0; self.len()]),
        }
    }
}

pub struct ProductSpace<'a> {
    schema: &'a FeatureSchema,
    next: Option<Vec<usize>>,
}

impl Iterator for ProductSpace<'_> {
    type Item = Entity;

    fn next(&mut self) -> Option<Entity> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.schema.domain_size(pos) {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(Entity::from_indices(current))
    }
}
