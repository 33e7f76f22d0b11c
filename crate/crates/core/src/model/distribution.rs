use std::io::Read;

use crate::scalar::Scalar;

use super::{validate_entity, Entity, FeatureSchema, ModelError};

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability model of the entity population.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationDistribution<P> {
    /// Independent per-feature marginals, indexed `[feature][value]`.
    Product { marginals: Vec<Vec<P>> },
    /// Observed (weighted) sample of entities.
    Empirical {
        rows: Vec<Entity>,
        weights: Vec<P>,
        total: P,
    },
}

impl<P: Scalar> PopulationDistribution<P> {
    /// Uniform product distribution over the full product space.
    pub fn uniform(schema: &FeatureSchema) -> Self {
        let marginals = schema
            .features()
            .iter()
            .map(|f| {
                let n = f.domain.len() as u64;
                vec![P::from_ratio(1, n); f.domain.len()]
            })
            .collect();
        Self::Product { marginals }
    }

    pub fn product(schema: &FeatureSchema, marginals: Vec<Vec<P>>) -> Result<Self, ModelError> {
        if marginals.len() != schema.len() {
            return Err(ModelError::InvalidDistribution(format!(
                "expected {} marginals, got {}",
                schema.len(),
                marginals.len()
            )));
        }
        for (f, m) in marginals.iter().enumerate() {
            let name = &schema.feature(f).name;
            if m.len() != schema.domain_size(f) {
                return Err(ModelError::InvalidDistribution(format!(
                    "marginal of `{name}` has {} entries, domain has {}",
                    m.len(),
                    schema.domain_size(f)
                )));
            }
            if m.iter().any(|p| *p < P::zero()) {
                return Err(ModelError::InvalidDistribution(format!(
                    "marginal of `{name}` has a negative probability"
                )));
            }
            let sum = m.iter().cloned().fold(P::zero(), |a, b| a + b);
            if !sum.within(&P::one(), SUM_TOLERANCE) {
                return Err(ModelError::InvalidDistribution(format!(
                    "marginal of `{name}` sums to {sum}"
                )));
            }
        }
        Ok(Self::Product { marginals })
    }

    /// Weighted sample; `None` weights means unit weights.
    pub fn empirical(
        schema: &FeatureSchema,
        rows: Vec<Entity>,
        weights: Option<Vec<P>>,
    ) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        for (i, row) in rows.iter().enumerate() {
            if let Err(ModelError::InvalidEntity(violations)) =
                Entity::from_values(schema, row.values().to_vec())
            {
                return Err(ModelError::DatasetRow {
                    row: i + 1,
                    violations,
                });
            }
        }
        let weights = weights.unwrap_or_else(|| vec![P::one(); rows.len()]);
        if weights.len() != rows.len() {
            return Err(ModelError::InvalidDistribution(format!(
                "{} weights for {} rows",
                weights.len(),
                rows.len()
            )));
        }
        if weights.iter().any(|w| *w < P::zero()) {
            return Err(ModelError::InvalidDistribution("negative weight".into()));
        }
        let total = weights.iter().cloned().fold(P::zero(), |a, b| a + b);
        if !total.is_positive() {
            return Err(ModelError::InvalidDistribution(
                "total weight must be positive".into(),
            ));
        }
        Ok(Self::Empirical {
            rows,
            weights,
            total,
        })
    }

    /// `P(feature = value)`: stored marginal or weighted frequency.
    pub fn marginal_probability(&self, feature: usize, value: usize) -> P {
        match self {
            Self::Product { marginals } => marginals[feature][value].clone(),
            Self::Empirical {
                rows,
                weights,
                total,
            } => {
                let mass = rows
                    .iter()
                    .zip(weights)
                    .filter(|(r, _)| r.value(feature) == value)
                    .fold(P::zero(), |acc, (_, w)| acc + w.clone());
                mass / total.clone()
            }
        }
    }

    /// Per-feature marginals (induced ones for an empirical distribution).
    pub fn marginals(&self, schema: &FeatureSchema) -> Vec<Vec<P>> {
        match self {
            Self::Product { marginals } => marginals.clone(),
            Self::Empirical { .. } => (0..schema.len())
                .map(|f| {
                    (0..schema.domain_size(f))
                        .map(|v| self.marginal_probability(f, v))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Reads a comma-separated dataset (header of feature names, one entity
/// per row) into an empirical distribution with unit weights.
pub fn load_empirical_distribution<P: Scalar, R: Read>(
    schema: &FeatureSchema,
    source: R,
) -> Result<PopulationDistribution<P>, ModelError> {
    let (rows, _) = read_entity_table(schema, source, None)?;
    PopulationDistribution::empirical(schema, rows, None)
}

/// Shared CSV reader: validates the header against the schema plus an
/// optional extra column, returning rows and the extra column's values.
pub(crate) fn read_entity_table<R: Read>(
    schema: &FeatureSchema,
    source: R,
    extra_column: Option<&str>,
) -> Result<(Vec<Entity>, Vec<String>), ModelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| ModelError::DatasetFormat(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut extra_index = None;
    for (i, name) in header.iter().enumerate() {
        if header[..i].contains(name) {
            return Err(ModelError::DatasetHeader(format!("duplicate column `{name}`")));
        }
        if Some(name.as_str()) == extra_column {
            extra_index = Some(i);
        } else if schema.index_of(name).is_none() {
            return Err(ModelError::DatasetHeader(format!("unknown column `{name}`")));
        }
    }
    for f in schema.features() {
        if !header.contains(&f.name) {
            return Err(ModelError::DatasetHeader(format!("missing column `{}`", f.name)));
        }
    }
    if let (Some(col), None) = (extra_column, extra_index) {
        return Err(ModelError::DatasetHeader(format!("missing column `{col}`")));
    }

    let mut rows = Vec::new();
    let mut extras = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ModelError::DatasetFormat(e.to_string()))?;
        let row = i + 1;
        let pairs = header
            .iter()
            .zip(record.iter())
            .enumerate()
            .filter(|(j, _)| Some(*j) != extra_index)
            .map(|(_, p)| p);
        let entity = validate_entity(schema, pairs)
            .map_err(|violations| ModelError::DatasetRow { row, violations })?;
        if let Some(j) = extra_index {
            extras.push(record.get(j).unwrap_or_default().to_owned());
        }
        rows.push(entity);
    }
    if rows.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    Ok((rows, extras))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureDef;

    fn loan() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDef::new("City", ["bronx", "brooklyn", "queens"], false),
            FeatureDef::new("Salary", ["low", "mid", "high"], true),
            FeatureDef::new("Age", ["young", "old"], false),
        ])
        .unwrap()
    }

    const DATA: &str = "Salary,City,Age\n\
        mid,bronx,young\n\
        low,bronx,old\n\
        high,queens,young\n\
        mid,brooklyn,young\n";

    #[test]
    fn uniform_marginal() {
        let s = loan();
        let d = PopulationDistribution::<f64>::uniform(&s);
        assert!((d.marginal_probability(0, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn product_marginal_is_stored() {
        let s = loan();
        let d = PopulationDistribution::product(
            &s,
            vec![vec![0.5, 0.25, 0.25], vec![0.2, 0.3, 0.5], vec![0.9, 0.1]],
        )
        .unwrap();
        assert_eq!(d.marginal_probability(0, 0), 0.5);
        assert!(PopulationDistribution::product(&s, vec![vec![0.5, 0.5, 0.5], vec![1.0, 0.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(PopulationDistribution::product(&s, vec![vec![1.5, -0.5, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn empirical_frequencies() {
        let s = loan();
        let d: PopulationDistribution<f64> = load_empirical_distribution(&s, DATA.as_bytes()).unwrap();
        assert_eq!(d.marginal_probability(0, 0), 0.5);
        assert_eq!(d.marginal_probability(0, 2), 0.25);
        for m in d.marginals(&s) {
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dataset_errors() {
        let s = loan();
        let unknown = "City,Salary,Age,Zip\nbronx,mid,young,1\n";
        assert!(matches!(
            load_empirical_distribution::<f64, _>(&s, unknown.as_bytes()),
            Err(ModelError::DatasetHeader(_))
        ));
        assert_eq!(
            load_empirical_distribution::<f64, _>(&s, "City,Salary,Age\n".as_bytes()),
            Err(ModelError::EmptyDataset)
        );
        let bad = "City,Salary,Age\nbronx,mid,young\nparis,mid,young\n";
        assert!(matches!(
            load_empirical_distribution::<f64, _>(&s, bad.as_bytes()),
            Err(ModelError::DatasetRow { row: 2, .. })
        ));
    }

    #[test]
    fn weighted_empirical() {
        let s = loan();
        let rows: Vec<_> = s.entities().take(2).collect();
        let d = PopulationDistribution::empirical(&s, rows.clone(), Some(vec![3.0, 1.0])).unwrap();
        assert_eq!(d.marginal_probability(2, 0), 0.75);
        assert!(PopulationDistribution::empirical(&s, rows, Some(vec![0.0, 0.0])).is_err());
    }
}
