use std::fmt::Write;

use crate::model::{Entity, FeatureSchema, PopulationDistribution};
use crate::scalar::Scalar;

use super::formula::render_value;
use super::{Atom, EvalContext, Formula};

/// A hard constraint on counterfactual models.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    Formula(Formula),
    /// A change may only move an ordered feature up its domain.
    OnlyIncrease(usize),
    /// A change may only move an ordered feature down its domain.
    OnlyDecrease(usize),
}

impl Constraint {
    pub fn eval(&self, ctx: &EvalContext<'_>) -> bool {
        match self {
            Self::Formula(f) => f.eval(ctx),
            Self::OnlyIncrease(f) => {
                ctx.counterfactual.value(*f) >= ctx.original.value(*f)
            }
            Self::OnlyDecrease(f) => {
                ctx.counterfactual.value(*f) <= ctx.original.value(*f)
            }
        }
    }

    /// Formula form for a given original entity:
    /// `changed(F) -> (F != v_1 and ... )` over the forbidden values.
    pub fn expand(&self, schema: &FeatureSchema, original: &Entity) -> Formula {
        let (feature, forbidden): (usize, Vec<usize>) = match self {
            Self::Formula(f) => return f.clone(),
            Self::OnlyIncrease(f) => (*f, (0..=original.value(*f)).collect()),
            Self::OnlyDecrease(f) => (*f, (original.value(*f)..schema.domain_size(*f)).collect()),
        };
        let mut guard = forbidden.into_iter().map(|value| {
            Formula::Atom(Atom::Value {
                feature,
                value,
                negated: true,
            })
        });
        let first = guard.next().expect("original value is always forbidden");
        let body = guard.fold(first, Formula::and);
        Formula::implies(Formula::Atom(Atom::Changed(feature)), body)
    }

    pub fn label_classes(&self) -> Vec<&str> {
        match self {
            Self::Formula(f) => f.label_classes(),
            _ => vec![],
        }
    }

    pub fn render(&self, schema: &FeatureSchema) -> String {
        match self {
            Self::Formula(f) => f.render(schema),
            Self::OnlyIncrease(f) => format!("only_increase {}", schema.feature(*f).name),
            Self::OnlyDecrease(f) => format!("only_decrease {}", schema.feature(*f).name),
        }
    }
}

/// Declared marginal of one feature; literals are kept verbatim per
/// domain value so documents reprint exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marginal {
    pub feature: usize,
    pub probabilities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecDocument {
    pub(crate) schema: FeatureSchema,
    pub(crate) entities: Vec<(String, Entity)>,
    pub(crate) constraints: Vec<Constraint>,
    pub(crate) marginals: Vec<Marginal>,
}

impl SpecDocument {
    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn entities(&self) -> &[(String, Entity)] {
        &self.entities
    }

    pub fn entity(&self, name: &str) -> Option<&Entity> {
        self.entities.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Product distribution from the declared marginals; undeclared
    /// features are uniform.
    pub fn distribution<P: Scalar>(&self) -> PopulationDistribution<P> {
        let mut marginals = match PopulationDistribution::<P>::uniform(&self.schema) {
            PopulationDistribution::Product { marginals } => marginals,
            PopulationDistribution::Empirical { .. } => unreachable!(),
        };
        for m in &self.marginals {
            marginals[m.feature] = m
                .probabilities
                .iter()
                .map(|t| P::parse_decimal(t).expect("validated at parse time"))
                .collect();
        }
        PopulationDistribution::Product { marginals }
    }

    /// Canonical text form; reparses to an equal document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let schema = &self.schema;
        for f in schema.features() {
            let values: Vec<_> = f.domain.iter().map(|v| render_value(v)).collect();
            let _ = writeln!(
                out,
                "feature {} {{{}}}{};",
                f.name,
                values.join(", "),
                if f.ordered { " ordered" } else { "" }
            );
        }
        for (name, e) in &self.entities {
            let pairs: Vec<_> = e
                .tokens(schema)
                .into_iter()
                .map(|(f, v)| format!("{f} = {}", render_value(v)))
                .collect();
            let _ = writeln!(out, "entity {name} {{{}}};", pairs.join(", "));
        }
        for c in &self.constraints {
            match c {
                Constraint::Formula(f) => {
                    let _ = writeln!(out, "constraint {};", f.render(schema));
                }
                other => {
                    let _ = writeln!(out, "{};", other.render(schema));
                }
            }
        }
        for m in &self.marginals {
            let entries: Vec<_> = m
                .probabilities
                .iter()
                .enumerate()
                .map(|(v, p)| format!("{}: {p}", render_value(schema.value_name(m.feature, v))))
                .collect();
            let _ = writeln!(
                out,
                "marginal {} {{{}}};",
                schema.feature(m.feature).name,
                entries.join(", ")
            );
        }
        out
    }
}
