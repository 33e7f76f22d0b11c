//! Counterfactual explanations for classifiers over categorical features.
//!
//! The crate computes counterfactual versions of an entity under hard
//! constraints, minimum-change selection, brave and cautious queries over
//! the resulting models, and the x-resp, resp and Shap attribution scores.
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to
//! `f64` or to exact rationals.

pub mod classifiers;
pub mod cli;
pub mod engine;
pub mod model;
pub mod scalar;
pub mod scores;
pub mod speclang;

pub use classifiers::{Classifier, ClassifierError, ClassifierHandle, ClassifierKind};
pub use engine::{
    answer_query, compare_classifiers, enumerate_counterfactuals, max_responsibility_counterfactuals,
    minimal_counterfactuals, CipConfig, EngineError, Minimality, ModelSet, QueryMode, QueryStatus,
};
pub use model::{
    apply_intervention, enumerate_interventions, CounterfactualModel, Entity, FeatureDef, FeatureSchema,
    Intervention, ModelError, PopulationDistribution,
};
pub use scalar::Scalar;
pub use scores::{ResponsibilityConfig, ScoreError, ScoreKind};
pub use speclang::{parse_formula, parse_spec, Constraint, Formula, SpecDocument, SpecError};

pub use num_rational::BigRational;

pub type Distribution = PopulationDistribution<f64>;
pub type ExactDistribution = PopulationDistribution<BigRational>;
pub type Score = scores::ScoreRecord<f64>;
pub type ExactScore = scores::ScoreRecord<BigRational>;
pub type ShapSettings = scores::ShapConfig<f64>;
pub type Report = scores::ScoreReport<f64>;
