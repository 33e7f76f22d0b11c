use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{Entity, FeatureSchema};

use super::ClassifierError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Leaf(usize),
    /// One branch per domain value of `feature`, indexed by value.
    Internal {
        feature: usize,
        branches: Vec<TreeNode>,
    },
}

/// Branch-complete decision tree over a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTreeModel {
    pub root: TreeNode,
}

impl DecisionTreeModel {
    pub fn classify(&self, e: &Entity) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(class) => return *class,
                TreeNode::Internal { feature, branches } => node = &branches[e.value(*feature)],
            }
        }
    }

    /// Serializes back to the JSON tree document.
    pub fn to_document(&self, schema: &FeatureSchema, classes: &[String]) -> Value {
        fn node_doc(n: &TreeNode, schema: &FeatureSchema, classes: &[String]) -> NodeDoc {
            match n {
                TreeNode::Leaf(c) => NodeDoc::Leaf {
                    leaf: classes[*c].clone(),
                },
                TreeNode::Internal { feature, branches } => NodeDoc::Internal {
                    feature: schema.feature(*feature).name.clone(),
                    branches: branches
                        .iter()
                        .enumerate()
                        .map(|(v, b)| {
                            (schema.value_name(*feature, v).to_owned(), node_doc(b, schema, classes))
                        })
                        .collect(),
                },
            }
        }
        serde_json::to_value(TreeDoc {
            classes: classes.to_vec(),
            root: node_doc(&self.root, schema, classes),
        })
        .expect("tree document serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    classes: Vec<String>,
    root: NodeDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Leaf {
        leaf: String,
    },
    Internal {
        feature: String,
        branches: BTreeMap<String, NodeDoc>,
    },
}

pub(crate) fn check_classes(classes: &[String]) -> Result<(), ClassifierError> {
    if classes.is_empty() {
        return Err(ClassifierError::InvalidClasses("no classes declared".into()));
    }
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].contains(c) {
            return Err(ClassifierError::InvalidClasses(format!("duplicate class `{c}`")));
        }
    }
    Ok(())
}

/// Parses and validates a tree document; returns the model and its classes.
pub fn parse_tree_document(
    source: &str,
    schema: &FeatureSchema,
) -> Result<(DecisionTreeModel, Vec<String>), ClassifierError> {
    let doc: TreeDoc =
        serde_json::from_str(source).map_err(|e| ClassifierError::Document(e.to_string()))?;
    check_classes(&doc.classes)?;
    let root = build_node(doc.root, schema, &doc.classes)?;
    Ok((DecisionTreeModel { root }, doc.classes))
}

fn build_node(
    node: NodeDoc,
    schema: &FeatureSchema,
    classes: &[String],
) -> Result<TreeNode, ClassifierError> {
    match node {
        NodeDoc::Leaf { leaf } => classes
            .iter()
            .position(|c| *c == leaf)
            .map(TreeNode::Leaf)
            .ok_or(ClassifierError::UnknownClassAtLeaf(leaf)),
        NodeDoc::Internal { feature, branches } => {
            let f = schema
                .index_of(&feature)
                .ok_or_else(|| ClassifierError::UnknownFeature(feature.clone()))?;
            let mut slots: Vec<Option<TreeNode>> = vec![None; schema.domain_size(f)];
            for (value, child) in branches {
                let v = schema.feature(f).value_index(&value).ok_or_else(|| {
                    ClassifierError::UnknownValue {
                        feature: feature.clone(),
                        value: value.clone(),
                    }
                })?;
                slots[v] = Some(build_node(child, schema, classes)?);
            }
            let missing: Vec<String> = slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_none())
                .map(|(v, _)| schema.value_name(f, v).to_owned())
                .collect();
            if !missing.is_empty() {
                return Err(ClassifierError::IncompleteBranches { feature, missing });
            }
            Ok(TreeNode::Internal {
                feature: f,
                branches: slots.into_iter().map(Option::unwrap).collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_entity, FeatureDef};

    fn loan() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDef::new("City", ["bronx", "brooklyn", "queens"], false),
            FeatureDef::new("Salary", ["low", "mid", "high"], true),
            FeatureDef::new("Age", ["young", "old"], false),
        ])
        .unwrap()
    }

    const LOAN_TREE: &str = r#"{
        "classes": ["accept", "reject"],
        "root": {"feature": "Salary", "branches": {
            "high": {"leaf": "accept"},
            "mid":  {"feature": "City", "branches": {
                "queens": {"leaf": "accept"}, "bronx": {"leaf": "reject"}, "brooklyn": {"leaf": "reject"}}},
            "low":  {"feature": "City", "branches": {
                "queens": {"leaf": "accept"}, "bronx": {"leaf": "reject"}, "brooklyn": {"leaf": "reject"}}}
        }}
    }"#;

    #[test]
    fn loads_and_walks() {
        let s = loan();
        let (t, classes) = parse_tree_document(LOAN_TREE, &s).unwrap();
        assert_eq!(classes, ["accept", "reject"]);
        let e0 = validate_entity(&s, [("City", "bronx"), ("Salary", "mid"), ("Age", "young")]).unwrap();
        assert_eq!(classes[t.classify(&e0)], "reject");
        let e1 = e0.with_value(0, 2);
        assert_eq!(classes[t.classify(&e1)], "accept");
    }

    #[test]
    fn document_round_trip() {
        let s = loan();
        let (t, classes) = parse_tree_document(LOAN_TREE, &s).unwrap();
        let text = t.to_document(&s, &classes).to_string();
        let (t2, c2) = parse_tree_document(&text, &s).unwrap();
        assert_eq!((t, classes), (t2, c2));
    }

    #[test]
    fn incomplete_branches() {
        let s = loan();
        let doc = LOAN_TREE.replacen(r#""queens": {"leaf": "accept"}, "#, "", 1);
        let err = parse_tree_document(&doc, &s).unwrap_err();
        assert_eq!(
            err,
            ClassifierError::IncompleteBranches {
                feature: "City".into(),
                missing: vec!["queens".into()]
            }
        );
    }

    #[test]
    fn unknown_names() {
        let s = loan();
        let err = parse_tree_document(&LOAN_TREE.replace(r#"{"leaf": "accept"}"#, r#"{"leaf": "maybe"}"#), &s);
        assert_eq!(err.unwrap_err(), ClassifierError::UnknownClassAtLeaf("maybe".into()));
        let err = parse_tree_document(&LOAN_TREE.replace("\"Salary\"", "\"Income\""), &s);
        assert_eq!(err.unwrap_err(), ClassifierError::UnknownFeature("Income".into()));
        let err = parse_tree_document(&LOAN_TREE.replace("\"high\"", "\"huge\""), &s);
        assert!(matches!(err.unwrap_err(), ClassifierError::UnknownValue { .. }));
        let err = parse_tree_document(r#"{"classes": [], "root": {"leaf": "a"}}"#, &s);
        assert!(matches!(err.unwrap_err(), ClassifierError::InvalidClasses(_)));
        assert!(matches!(
            parse_tree_document("{", &s).unwrap_err(),
            ClassifierError::Document(_)
        ));
    }
}
