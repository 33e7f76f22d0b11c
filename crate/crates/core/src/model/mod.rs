//! Core vocabulary: schemas, entities, interventions, counterfactual
//! models and population distributions.

mod distribution;
mod entity;
mod error;
mod intervention;
mod schema;

pub use distribution::{load_empirical_distribution, PopulationDistribution};
pub(crate) use distribution::read_entity_table;
pub use entity::{validate_entity, Entity, EntityViolation};
pub use error::ModelError;
pub(crate) use intervention::apply_unchecked;
pub use intervention::{
    apply_intervention, enumerate_interventions, intervention_count, CounterfactualModel,
    Intervention, Interventions,
};
pub use schema::{FeatureDef, FeatureSchema, ProductSpace};
