//! Uniform label-producing interface over decision trees, naive-Bayes
//! models, explicit tables and external black-box processes.
//!
//! Labels are returned as indices into [`Classifier::classes`].

mod error;
pub mod external;
mod naive_bayes;
mod tabulated;
mod tree;

use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;

use crate::model::{Entity, FeatureSchema};

pub use error::ClassifierError;
pub use external::{ExternalClassifier, ExternalConfig, Transport};
pub use naive_bayes::{parse_naive_bayes_document, NaiveBayesModel};
pub use tabulated::{parse_tabulated, TabulatedModel};
pub use tree::{parse_tree_document, DecisionTreeModel, TreeNode};

/// Anything that maps entities of a fixed schema to one of its classes.
///
/// Implementations must be pure: equal entities get equal labels.
pub trait Classifier: Send + Sync {
    fn classes(&self) -> &[String];

    fn classify(&self, e: &Entity) -> Result<usize, ClassifierError>;

    /// Order-preserving; the first failure aborts with its index.
    fn classify_batch(&self, es: &[Entity]) -> Result<Vec<usize>, ClassifierError> {
        es.iter()
            .enumerate()
            .map(|(i, e)| self.classify(e).map_err(|err| err.at(i)))
            .collect()
    }

    fn class_index(&self, token: &str) -> Option<usize> {
        self.classes().iter().position(|c| c == token)
    }

    fn label(&self, class: usize) -> &str {
        &self.classes()[class]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Tree,
    NaiveBayes,
    Tabulated,
    External,
}

#[derive(Debug)]
enum Payload {
    Tree(DecisionTreeModel),
    NaiveBayes(NaiveBayesModel<f64>),
    Tabulated(TabulatedModel),
    External(Box<ExternalClassifier>),
}

/// A classifier plus its class list and optional memo cache keyed by the
/// canonical (schema-ordered) entity.
#[derive(Debug)]
pub struct ClassifierHandle {
    classes: Vec<String>,
    payload: Payload,
    cache: Option<Mutex<HashMap<Entity, usize>>>,
}

impl ClassifierHandle {
    fn new(classes: Vec<String>, payload: Payload, cache: bool) -> Self {
        Self {
            classes,
            payload,
            cache: cache.then(|| Mutex::new(HashMap::new())),
        }
    }

    pub fn from_tree(tree: DecisionTreeModel, classes: Vec<String>) -> Self {
        Self::new(classes, Payload::Tree(tree), false)
    }

    pub fn from_naive_bayes(model: NaiveBayesModel<f64>, classes: Vec<String>) -> Self {
        Self::new(classes, Payload::NaiveBayes(model), false)
    }

    pub fn from_table(table: TabulatedModel, classes: Vec<String>) -> Self {
        Self::new(classes, Payload::Tabulated(table), false)
    }

    /// Tabulates `f` over the whole product space.
    pub fn tabulate(
        schema: &FeatureSchema,
        classes: Vec<String>,
        f: impl FnMut(&Entity) -> usize,
    ) -> Self {
        Self::from_table(TabulatedModel::from_fn(schema, f), classes)
    }

    pub fn from_external(external: ExternalClassifier) -> Self {
        let classes = external.classes().to_vec();
        let cache = external.config().cache;
        Self::new(classes, Payload::External(Box::new(external)), cache)
    }

    /// Enables or disables memoization.
    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache = enabled.then(|| Mutex::new(HashMap::new()));
        self
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.payload {
            Payload::Tree(_) => ClassifierKind::Tree,
            Payload::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            Payload::Tabulated(_) => ClassifierKind::Tabulated,
            Payload::External(_) => ClassifierKind::External,
        }
    }

    pub fn tree(&self) -> Option<&DecisionTreeModel> {
        match &self.payload {
            Payload::Tree(t) => Some(t),
            _ => None,
        }
    }

    fn classify_uncached(&self, es: &[Entity]) -> Result<Vec<usize>, ClassifierError> {
        match &self.payload {
            Payload::Tree(t) => Ok(es.iter().map(|e| t.classify(e)).collect()),
            Payload::Tabulated(t) => Ok(es.iter().map(|e| t.classify(e)).collect()),
            Payload::NaiveBayes(m) => es
                .iter()
                .enumerate()
                .map(|(i, e)| m.classify(e).map_err(|err| err.at(i)))
                .collect(),
            Payload::External(x) => x.classify_batch(es),
        }
    }
}

impl Classifier for ClassifierHandle {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn classify(&self, e: &Entity) -> Result<usize, ClassifierError> {
        self.classify_batch(std::slice::from_ref(e))
            .map(|v| v[0])
            .map_err(|err| match err {
                ClassifierError::AtIndex { source, .. } => *source,
                other => other,
            })
    }

    fn classify_batch(&self, es: &[Entity]) -> Result<Vec<usize>, ClassifierError> {
        let Some(cache) = &self.cache else {
            return self.classify_uncached(es);
        };
        let mut misses: Vec<Entity> = Vec::new();
        let mut miss_index: HashMap<&Entity, usize> = HashMap::new();
        let mut first_use: Vec<usize> = Vec::new();
        {
            let cache = cache.lock().unwrap_or_else(|p| p.into_inner());
            for (i, e) in es.iter().enumerate() {
                if !cache.contains_key(e) && !miss_index.contains_key(e) {
                    miss_index.insert(e, misses.len());
                    misses.push(e.clone());
                    first_use.push(i);
                }
            }
        }
        let fresh = self
            .classify_uncached(&misses)
            .map_err(|err| match err {
                ClassifierError::AtIndex { index, source } => ClassifierError::AtIndex {
                    index: first_use[index],
                    source,
                },
                other => other,
            })?;
        let mut cache = cache.lock().unwrap_or_else(|p| p.into_inner());
        for (e, label) in misses.into_iter().zip(fresh) {
            cache.insert(e, label);
        }
        Ok(es.iter().map(|e| cache[e]).collect())
    }
}

/// Loads a decision-tree document.
pub fn load_decision_tree(
    source: &str,
    schema: &FeatureSchema,
) -> Result<ClassifierHandle, ClassifierError> {
    let (tree, classes) = parse_tree_document(source, schema)?;
    Ok(ClassifierHandle::from_tree(tree, classes))
}

/// Loads a naive-Bayes document.
pub fn load_naive_bayes(
    source: &str,
    schema: &FeatureSchema,
) -> Result<ClassifierHandle, ClassifierError> {
    let (model, classes) = parse_naive_bayes_document(source, schema)?;
    Ok(ClassifierHandle::from_naive_bayes(model, classes))
}

/// Loads a full-coverage CSV table (`label` column).
pub fn load_tabulated<R: Read>(
    source: R,
    schema: &FeatureSchema,
) -> Result<ClassifierHandle, ClassifierError> {
    let (table, classes) = parse_tabulated(source, schema)?;
    Ok(ClassifierHandle::from_table(table, classes))
}

/// Classifies `es` with `pool`-parallel chunks, preserving order.
pub(crate) fn classify_parallel(
    classifier: &dyn Classifier,
    es: &[Entity],
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<usize>, ClassifierError> {
    const CHUNK: usize = 256;
    match pool {
        Some(pool) if es.len() > CHUNK => {
            use rayon::prelude::*;
            let chunks: Vec<Result<Vec<usize>, ClassifierError>> = pool.install(|| {
                es.par_chunks(CHUNK)
                    .enumerate()
                    .map(|(c, chunk)| {
                        classifier.classify_batch(chunk).map_err(|err| match err {
                            ClassifierError::AtIndex { index, source } => ClassifierError::AtIndex {
                                index: c * CHUNK + index,
                                source,
                            },
                            other => other,
                        })
                    })
                    .collect()
            });
            let mut out = Vec::with_capacity(es.len());
            for chunk in chunks {
                out.extend(chunk?);
            }
            Ok(out)
        }
        _ => classifier.classify_batch(es),
    }
}
