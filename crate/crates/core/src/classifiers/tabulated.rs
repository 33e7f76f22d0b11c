use std::io::Read;

use crate::model::{read_entity_table, Entity, FeatureSchema};

use super::tree::check_classes;
use super::ClassifierError;

/// Explicit label for every entity of the product space, stored densely
/// in product-space rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabulatedModel {
    strides: Vec<usize>,
    labels: Vec<usize>,
}

fn strides(schema: &FeatureSchema) -> Vec<usize> {
    let mut strides = vec![1; schema.len()];
    for f in (0..schema.len().saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * schema.domain_size(f + 1);
    }
    strides
}

impl TabulatedModel {
    /// Tabulates `f` over the whole product space.
    pub fn from_fn(schema: &FeatureSchema, mut f: impl FnMut(&Entity) -> usize) -> Self {
        Self {
            strides: strides(schema),
            labels: schema.entities().map(|e| f(&e)).collect(),
        }
    }

    fn rank(&self, e: &Entity) -> usize {
        e.values().iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    pub fn classify(&self, e: &Entity) -> usize {
        self.labels[self.rank(e)]
    }
}

/// Reads a CSV table with the schema's feature columns plus `label`.
/// Classes are taken in order of first appearance.
pub fn parse_tabulated<R: Read>(
    source: R,
    schema: &FeatureSchema,
) -> Result<(TabulatedModel, Vec<String>), ClassifierError> {
    let (rows, labels) = read_entity_table(schema, source, Some("label"))?;
    let mut classes: Vec<String> = Vec::new();
    let strides = strides(schema);
    let size = usize::try_from(schema.space_size())
        .map_err(|_| ClassifierError::Document("product space too large to tabulate".into()))?;
    let mut table: Vec<Option<usize>> = vec![None; size];
    for (row, label) in rows.iter().zip(labels) {
        let class = match classes.iter().position(|c| *c == label) {
            Some(c) => c,
            None => {
                classes.push(label);
                classes.len() - 1
            }
        };
        let rank: usize = row.values().iter().zip(&strides).map(|(v, s)| v * s).sum();
        if table[rank].replace(class).is_some() {
            return Err(ClassifierError::DuplicateEntity(row.display(schema).to_string()));
        }
    }
    if let Some(missing) = table.iter().position(Option::is_none) {
        let e = schema.entities().nth(missing).expect("rank within space");
        return Err(ClassifierError::MissingEntity(e.display(schema).to_string()));
    }
    check_classes(&classes)?;
    Ok((
        TabulatedModel {
            strides,
            labels: table.into_iter().map(Option::unwrap).collect(),
        },
        classes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureDef;

    fn binary() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDef::new("F1", ["0", "1"], false),
            FeatureDef::new("F2", ["0", "1"], false),
        ])
        .unwrap()
    }

    #[test]
    fn full_cover() {
        let s = binary();
        let csv = "F1,F2,label\n0,0,no\n0,1,no\n1,0,no\n1,1,yes\n";
        let (t, classes) = parse_tabulated(csv.as_bytes(), &s).unwrap();
        assert_eq!(classes, ["no", "yes"]);
        let labels: Vec<_> = s.entities().map(|e| t.classify(&e)).collect();
        assert_eq!(labels, [0, 0, 0, 1]);
    }

    #[test]
    fn missing_entity() {
        let s = binary();
        let csv = "F1,F2,label\n0,0,no\n0,1,no\n1,1,yes\n";
        let err = parse_tabulated(csv.as_bytes(), &s).unwrap_err();
        assert_eq!(err, ClassifierError::MissingEntity("(F1=1, F2=0)".into()));
    }

    #[test]
    fn duplicate_entity() {
        let s = binary();
        let csv = "F1,F2,label\n0,0,no\n0,1,no\n1,0,no\n1,1,yes\n0,1,yes\n";
        let err = parse_tabulated(csv.as_bytes(), &s).unwrap_err();
        assert!(matches!(err, ClassifierError::DuplicateEntity(_)));
    }

    #[test]
    fn requires_label_column() {
        let s = binary();
        let err = parse_tabulated("F1,F2\n0,0\n".as_bytes(), &s).unwrap_err();
        assert!(matches!(err, ClassifierError::Dataset(_)));
    }

    #[test]
    fn from_fn_agrees_with_function() {
        let s = binary();
        let t = TabulatedModel::from_fn(&s, |e| e.value(0) ^ e.value(1));
        for e in s.entities() {
            assert_eq!(t.classify(&e), e.value(0) ^ e.value(1));
        }
    }
}
