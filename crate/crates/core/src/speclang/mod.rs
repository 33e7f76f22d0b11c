//! The specification language: schema, entities, constraints and
//! marginals, plus the formula language shared by constraints and queries.
//!
//! ```text
//! feature City {bronx, brooklyn, queens};
//! feature Salary {low, mid, high} ordered;
//! entity e0 {City = bronx, Salary = mid};
//! immutable City;                       % desugars to: not changed(City)
//! only_increase Salary;
//! constraint changed(City) -> orig(Salary) != low;
//! marginal City {bronx: 0.5, brooklyn: 0.25, queens: 0.25};
//! ```
//!
//! Precedence, loosest first: `->` (right-associative), `or`, `and`, `not`.

mod document;
mod error;
mod formula;
mod lexer;
mod parser;

pub use document::{Constraint, Marginal, SpecDocument};
pub use error::{NameKind, Pos, SpecError};
pub use formula::{Atom, EvalContext, Formula};
pub use parser::{parse_formula, parse_spec};

/// Evaluates `f` against a counterfactual model.
pub fn eval_formula(f: &Formula, ctx: &EvalContext<'_>) -> bool {
    f.eval(ctx)
}
