use std::fmt::Write;

use crate::model::{Entity, FeatureSchema};

use super::lexer::is_ident;

pub(crate) const KEYWORDS: &[&str] = &[
    "feature",
    "ordered",
    "entity",
    "constraint",
    "immutable",
    "only_increase",
    "only_decrease",
    "marginal",
    "changed",
    "orig",
    "label",
    "not",
    "and",
    "or",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    /// `changed(F)`
    Changed(usize),
    /// `F = v` / `F != v` on the counterfactual.
    Value {
        feature: usize,
        value: usize,
        negated: bool,
    },
    /// `orig(F) = v` / `orig(F) != v` on the original entity.
    Orig {
        feature: usize,
        value: usize,
        negated: bool,
    },
    /// `label = c` / `label != c`; class names are checked once a
    /// classifier is known.
    Label { class: String, negated: bool },
}

/// Boolean formula over counterfactual models.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// Material implication, right-associative.
    Implies(Box<Formula>, Box<Formula>),
}

/// What a formula is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub original: &'a Entity,
    pub counterfactual: &'a Entity,
    pub label: &'a str,
}

impl Formula {
    pub fn negate(f: Formula) -> Self {
        Self::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Self::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Self::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Self::Implies(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, ctx: &EvalContext<'_>) -> bool {
        match self {
            Self::Atom(atom) => match atom {
                Atom::Changed(f) => ctx.original.value(*f) != ctx.counterfactual.value(*f),
                Atom::Value {
                    feature,
                    value,
                    negated,
                } => (ctx.counterfactual.value(*feature) == *value) != *negated,
                Atom::Orig {
                    feature,
                    value,
                    negated,
                } => (ctx.original.value(*feature) == *value) != *negated,
                Atom::Label { class, negated } => (ctx.label == class) != *negated,
            },
            Self::Not(f) => !f.eval(ctx),
            Self::And(a, b) => a.eval(ctx) && b.eval(ctx),
            Self::Or(a, b) => a.eval(ctx) || b.eval(ctx),
            Self::Implies(a, b) => !a.eval(ctx) || b.eval(ctx),
        }
    }

    /// Class names used in `label` atoms, in first-occurrence order.
    pub fn label_classes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_classes(&mut out);
        out
    }

    fn collect_classes<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Self::Atom(Atom::Label { class, .. }) => {
                if !out.contains(&class.as_str()) {
                    out.push(class);
                }
            }
            Self::Atom(_) => {}
            Self::Not(f) => f.collect_classes(out),
            Self::And(a, b) | Self::Or(a, b) | Self::Implies(a, b) => {
                a.collect_classes(out);
                b.collect_classes(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Self::Implies(..) => 1,
            Self::Or(..) => 2,
            Self::And(..) => 3,
            Self::Not(_) => 4,
            Self::Atom(_) => 5,
        }
    }

    /// Renders the formula in the concrete syntax, with only the
    /// parentheses needed to reparse to the same tree.
    pub fn render(&self, schema: &FeatureSchema) -> String {
        let mut out = String::new();
        self.write_to(schema, &mut out);
        out
    }

    fn write_child(&self, schema: &FeatureSchema, parens: bool, out: &mut String) {
        if parens {
            out.push('(');
            self.write_to(schema, out);
            out.push(')');
        } else {
            self.write_to(schema, out);
        }
    }

    fn write_to(&self, schema: &FeatureSchema, out: &mut String) {
        match self {
            Self::Atom(atom) => write_atom(atom, schema, out),
            Self::Not(f) => {
                out.push_str("not ");
                f.write_child(schema, f.precedence() < 5, out);
            }
            Self::And(a, b) | Self::Or(a, b) => {
                let (p, word) = if matches!(self, Self::And(..)) {
                    (3, " and ")
                } else {
                    (2, " or ")
                };
                a.write_child(schema, a.precedence() < p, out);
                out.push_str(word);
                b.write_child(schema, b.precedence() <= p, out);
            }
            Self::Implies(a, b) => {
                a.write_child(schema, a.precedence() <= 1, out);
                out.push_str(" -> ");
                b.write_child(schema, false, out);
            }
        }
    }
}

/// A value token in concrete syntax: bare when it lexes back as the same
/// identifier or number, quoted otherwise.
pub(crate) fn render_value(token: &str) -> String {
    let numeric = {
        let (int, frac) = token.split_once('.').unwrap_or((token, "0"));
        !int.is_empty()
            && int.bytes().all(|b| b.is_ascii_digit())
            && !frac.is_empty()
            && frac.bytes().all(|b| b.is_ascii_digit())
    };
    if (is_ident(token) && !KEYWORDS.contains(&token)) || numeric {
        token.to_owned()
    } else {
        let escaped = token.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    }
}

fn write_atom(atom: &Atom, schema: &FeatureSchema, out: &mut String) {
    let op = |negated: bool| if negated { "!=" } else { "=" };
    match atom {
        Atom::Changed(f) => {
            let _ = write!(out, "changed({})", schema.feature(*f).name);
        }
        Atom::Value {
            feature,
            value,
            negated,
        } => {
            let _ = write!(
                out,
                "{} {} {}",
                schema.feature(*feature).name,
                op(*negated),
                render_value(schema.value_name(*feature, *value))
            );
        }
        Atom::Orig {
            feature,
            value,
            negated,
        } => {
            let _ = write!(
                out,
                "orig({}) {} {}",
                schema.feature(*feature).name,
                op(*negated),
                render_value(schema.value_name(*feature, *value))
            );
        }
        Atom::Label { class, negated } => {
            let _ = write!(out, "label {} {}", op(*negated), render_value(class));
        }
    }
}
