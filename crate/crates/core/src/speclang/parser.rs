use std::collections::HashSet;

use crate::model::{Entity, FeatureDef, FeatureSchema, ModelError};
use crate::scalar::Scalar;

use super::formula::KEYWORDS;
use super::lexer::{tokenize, Tok, Token};
use super::{Atom, Constraint, Formula, Marginal, NameKind, Pos, SpecDocument, SpecError};

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

const ATOM_START: &[&str] = &["`changed`", "`orig`", "`label`", "feature name", "`(`"];
const FORMULA_CONT: &[&str] = &["`and`", "`or`", "`->`"];

impl Parser {
    fn new(src: &str) -> Result<Self, SpecError> {
        Ok(Self {
            tokens: tokenize(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SpecError {
        let t = self.peek();
        SpecError::Syntax {
            pos: t.pos,
            expected: expected.iter().map(|s| (*s).to_owned()).collect(),
            found: t.tok.to_string(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().tok == *tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<Pos, SpecError> {
        if self.peek().tok == tok {
            Ok(self.advance().pos)
        } else {
            Err(self.error(expected))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), SpecError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.advance().pos))
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn value(&mut self) -> Result<(String, Pos), SpecError> {
        match &self.peek().tok {
            Tok::Ident(s) | Tok::Quoted(s) | Tok::Number(s) => {
                let s = s.clone();
                Ok((s, self.advance().pos))
            }
            _ => Err(self.error(&["value"])),
        }
    }

    fn comparison(&mut self) -> Result<bool, SpecError> {
        match self.peek().tok {
            Tok::Eq => {
                self.advance();
                Ok(false)
            }
            Tok::Neq => {
                self.advance();
                Ok(true)
            }
            _ => Err(self.error(&["`=`", "`!=`"])),
        }
    }

    // formula := disj ("->" formula)?
    fn formula(&mut self, scope: &Scope<'_>) -> Result<Formula, SpecError> {
        let lhs = self.disjunction(scope)?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula(scope)?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self, scope: &Scope<'_>) -> Result<Formula, SpecError> {
        let mut acc = self.conjunction(scope)?;
        while self.is_keyword("or") {
            self.advance();
            acc = Formula::or(acc, self.conjunction(scope)?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self, scope: &Scope<'_>) -> Result<Formula, SpecError> {
        let mut acc = self.literal(scope)?;
        while self.is_keyword("and") {
            self.advance();
            acc = Formula::and(acc, self.literal(scope)?);
        }
        Ok(acc)
    }

    fn literal(&mut self, scope: &Scope<'_>) -> Result<Formula, SpecError> {
        if self.is_keyword("not") {
            self.advance();
            Ok(Formula::negate(self.atom(scope, false)?))
        } else {
            self.atom(scope, true)
        }
    }

    fn atom(&mut self, scope: &Scope<'_>, allow_not: bool) -> Result<Formula, SpecError> {
        let start = self.peek().clone();
        match &start.tok {
            Tok::LParen => {
                self.advance();
                let inner = self.formula(scope)?;
                let mut expected = FORMULA_CONT.to_vec();
                expected.push("`)`");
                self.expect(Tok::RParen, &expected)?;
                Ok(inner)
            }
            Tok::Ident(word) if word == "changed" => {
                self.advance();
                self.expect(Tok::LParen, &["`(`"])?;
                let f = scope.feature(self.ident("feature name")?)?;
                self.expect(Tok::RParen, &["`)`"])?;
                Ok(Formula::Atom(Atom::Changed(f)))
            }
            Tok::Ident(word) if word == "orig" => {
                self.advance();
                self.expect(Tok::LParen, &["`(`"])?;
                let feature = scope.feature(self.ident("feature name")?)?;
                self.expect(Tok::RParen, &["`)`"])?;
                let negated = self.comparison()?;
                let value = scope.value(feature, self.value()?)?;
                Ok(Formula::Atom(Atom::Orig {
                    feature,
                    value,
                    negated,
                }))
            }
            Tok::Ident(word) if word == "label" => {
                self.advance();
                let negated = self.comparison()?;
                let class = scope.class(self.value()?)?;
                Ok(Formula::Atom(Atom::Label { class, negated }))
            }
            Tok::Ident(word) if !KEYWORDS.contains(&word.as_str()) => {
                let feature = scope.feature(self.ident("feature name")?)?;
                let negated = self.comparison()?;
                let value = scope.value(feature, self.value()?)?;
                Ok(Formula::Atom(Atom::Value {
                    feature,
                    value,
                    negated,
                }))
            }
            _ => {
                let mut expected = ATOM_START.to_vec();
                if allow_not {
                    expected.insert(0, "`not`");
                }
                Err(self.error(&expected))
            }
        }
    }
}

struct Scope<'a> {
    schema: &'a FeatureSchema,
    classes: Option<&'a [String]>,
}

impl Scope<'_> {
    fn feature(&self, (name, pos): (String, Pos)) -> Result<usize, SpecError> {
        self.schema.index_of(&name).ok_or(SpecError::UnknownName {
            pos,
            kind: NameKind::Feature,
            name,
        })
    }

    fn value(&self, feature: usize, (token, pos): (String, Pos)) -> Result<usize, SpecError> {
        self.schema
            .feature(feature)
            .value_index(&token)
            .ok_or(SpecError::UnknownName {
                pos,
                kind: NameKind::Value,
                name: token,
            })
    }

    fn class(&self, (token, pos): (String, Pos)) -> Result<String, SpecError> {
        match self.classes {
            Some(classes) if !classes.contains(&token) => Err(SpecError::UnknownName {
                pos,
                kind: NameKind::Class,
                name: token,
            }),
            _ => Ok(token),
        }
    }
}

/// Parses a query/constraint formula and name-checks it. With `classes`
/// set to `None`, class names in `label` atoms are left unchecked.
pub fn parse_formula(
    text: &str,
    schema: &FeatureSchema,
    classes: Option<&[String]>,
) -> Result<Formula, SpecError> {
    let mut p = Parser::new(text)?;
    let scope = Scope { schema, classes };
    let f = p.formula(&scope)?;
    if p.peek().tok != Tok::Eof {
        let mut expected = FORMULA_CONT.to_vec();
        expected.push("end of input");
        return Err(p.error(&expected));
    }
    Ok(f)
}

const STATEMENTS: &[&str] = &[
    "`feature`",
    "`entity`",
    "`constraint`",
    "`immutable`",
    "`only_increase`",
    "`only_decrease`",
    "`marginal`",
    "end of input",
];

struct DocBuilder {
    features: Vec<FeatureDef>,
    schema: FeatureSchema,
    entities: Vec<(String, Pos, Vec<Option<usize>>)>,
    constraints: Vec<Constraint>,
    marginals: Vec<Marginal>,
}

/// Parses a specification document. Names must be declared before use;
/// entity completeness is checked against the final schema.
pub fn parse_spec(text: &str) -> Result<SpecDocument, SpecError> {
    let mut p = Parser::new(text)?;
    let mut doc = DocBuilder {
        features: vec![],
        schema: FeatureSchema::new(vec![]).expect("empty schema"),
        entities: vec![],
        constraints: vec![],
        marginals: vec![],
    };
    loop {
        let head = p.peek().clone();
        let keyword = match &head.tok {
            Tok::Eof => break,
            Tok::Ident(k) => k.clone(),
            _ => return Err(p.error(STATEMENTS)),
        };
        match keyword.as_str() {
            "feature" => feature_stmt(&mut p, &mut doc)?,
            "entity" => entity_stmt(&mut p, &mut doc)?,
            "constraint" => {
                p.advance();
                let scope = Scope {
                    schema: &doc.schema,
                    classes: None,
                };
                let f = p.formula(&scope)?;
                let mut expected = FORMULA_CONT.to_vec();
                expected.push("`;`");
                p.expect(Tok::Semi, &expected)?;
                doc.constraints.push(Constraint::Formula(f));
            }
            "immutable" | "only_increase" | "only_decrease" => {
                p.advance();
                let (name, pos) = p.ident("feature name")?;
                let scope = Scope {
                    schema: &doc.schema,
                    classes: None,
                };
                let f = scope.feature((name.clone(), pos))?;
                p.expect(Tok::Semi, &["`;`"])?;
                let c = match keyword.as_str() {
                    "immutable" => Constraint::Formula(Formula::negate(Formula::Atom(Atom::Changed(f)))),
                    dir => {
                        if !doc.schema.feature(f).ordered {
                            return Err(SpecError::Invalid {
                                pos,
                                message: format!("`{dir}` requires an ordered feature; `{name}` is unordered"),
                            });
                        }
                        if dir == "only_increase" {
                            Constraint::OnlyIncrease(f)
                        } else {
                            Constraint::OnlyDecrease(f)
                        }
                    }
                };
                doc.constraints.push(c);
            }
            "marginal" => marginal_stmt(&mut p, &mut doc)?,
            _ => return Err(p.error(STATEMENTS)),
        }
    }

    let mut entities = Vec::with_capacity(doc.entities.len());
    for (name, pos, values) in doc.entities {
        let mut resolved = Vec::with_capacity(values.len());
        for (f, v) in values.iter().enumerate() {
            match v {
                Some(v) => resolved.push(*v),
                None => {
                    return Err(SpecError::Invalid {
                        pos,
                        message: format!(
                            "entity `{name}` does not assign feature `{}`",
                            doc.schema.feature(f).name
                        ),
                    })
                }
            }
        }
        let entity = Entity::from_values(&doc.schema, resolved).expect("resolved values in domain");
        entities.push((name, entity));
    }
    Ok(SpecDocument {
        schema: doc.schema,
        entities,
        constraints: doc.constraints,
        marginals: doc.marginals,
    })
}

fn feature_stmt(p: &mut Parser, doc: &mut DocBuilder) -> Result<(), SpecError> {
    p.advance();
    let (name, pos) = p.ident("feature name")?;
    if KEYWORDS.contains(&name.as_str()) {
        return Err(SpecError::Invalid {
            pos,
            message: format!("`{name}` is a reserved word"),
        });
    }
    if doc.schema.index_of(&name).is_some() {
        return Err(SpecError::Invalid {
            pos,
            message: format!("feature `{name}` declared twice"),
        });
    }
    p.expect(Tok::LBrace, &["`{`"])?;
    let mut domain: Vec<String> = Vec::new();
    loop {
        let (v, vpos) = p.value()?;
        if domain.contains(&v) {
            return Err(SpecError::Invalid {
                pos: vpos,
                message: format!("value `{v}` repeated in domain of `{name}`"),
            });
        }
        domain.push(v);
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.expect(Tok::RBrace, &["`,`", "`}`"])?;
    let ordered = if p.is_keyword("ordered") {
        p.advance();
        true
    } else {
        false
    };
    let expected: &[&str] = if ordered { &["`;`"] } else { &["`ordered`", "`;`"] };
    p.expect(Tok::Semi, expected)?;

    doc.features.push(FeatureDef {
        name,
        domain,
        ordered,
    });
    doc.schema = FeatureSchema::new(doc.features.clone()).map_err(|e| SpecError::Invalid {
        pos,
        message: match e {
            ModelError::SpaceTooLarge => "product space exceeds 2^63-1 entities".into(),
            other => other.to_string(),
        },
    })?;
    for (_, _, values) in &mut doc.entities {
        values.push(None);
    }
    Ok(())
}

fn entity_stmt(p: &mut Parser, doc: &mut DocBuilder) -> Result<(), SpecError> {
    p.advance();
    let (name, pos) = p.ident("entity name")?;
    if doc.entities.iter().any(|(n, _, _)| *n == name) {
        return Err(SpecError::Invalid {
            pos,
            message: format!("entity `{name}` declared twice"),
        });
    }
    p.expect(Tok::LBrace, &["`{`"])?;
    let mut values: Vec<Option<usize>> = vec![None; doc.schema.len()];
    let scope = Scope {
        schema: &doc.schema,
        classes: None,
    };
    loop {
        let (fname, fpos) = p.ident("feature name")?;
        let f = scope.feature((fname.clone(), fpos))?;
        p.expect(Tok::Eq, &["`=`"])?;
        let v = scope.value(f, p.value()?)?;
        if values[f].replace(v).is_some() {
            return Err(SpecError::Invalid {
                pos: fpos,
                message: format!("feature `{fname}` assigned twice in entity `{name}`"),
            });
        }
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.expect(Tok::RBrace, &["`,`", "`}`"])?;
    p.expect(Tok::Semi, &["`;`"])?;
    doc.entities.push((name, pos, values));
    Ok(())
}

fn marginal_stmt(p: &mut Parser, doc: &mut DocBuilder) -> Result<(), SpecError> {
    p.advance();
    let (name, pos) = p.ident("feature name")?;
    let scope = Scope {
        schema: &doc.schema,
        classes: None,
    };
    let f = scope.feature((name.clone(), pos))?;
    if doc.marginals.iter().any(|m| m.feature == f) {
        return Err(SpecError::Invalid {
            pos,
            message: format!("marginal for `{name}` declared twice"),
        });
    }
    p.expect(Tok::LBrace, &["`{`"])?;
    let mut probabilities: Vec<Option<String>> = vec![None; doc.schema.domain_size(f)];
    let mut seen = HashSet::new();
    loop {
        let (token, vpos) = p.value()?;
        let v = scope.value(f, (token.clone(), vpos))?;
        if !seen.insert(v) {
            return Err(SpecError::Invalid {
                pos: vpos,
                message: format!("value `{token}` repeated in marginal of `{name}`"),
            });
        }
        p.expect(Tok::Colon, &["`:`"])?;
        let number = match &p.peek().tok {
            Tok::Number(n) => n.clone(),
            _ => return Err(p.error(&["number"])),
        };
        p.advance();
        probabilities[v] = Some(number);
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.expect(Tok::RBrace, &["`,`", "`}`"])?;
    p.expect(Tok::Semi, &["`;`"])?;

    if let Some(missing) = probabilities.iter().position(Option::is_none) {
        return Err(SpecError::Invalid {
            pos,
            message: format!(
                "marginal of `{name}` does not cover value `{}`",
                doc.schema.value_name(f, missing)
            ),
        });
    }
    let probabilities: Vec<String> = probabilities.into_iter().map(Option::unwrap).collect();
    let sum: f64 = probabilities
        .iter()
        .map(|t| f64::parse_decimal(t).expect("lexer produced a decimal"))
        .sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SpecError::Invalid {
            pos,
            message: format!("marginal of `{name}` sums to {sum}, expected 1"),
        });
    }
    doc.marginals.push(Marginal {
        feature: f,
        probabilities,
    });
    Ok(())
}
