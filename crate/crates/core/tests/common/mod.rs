//! Fixtures, random instance generators and brute-force oracles shared by
//! the integration tests. The oracles enumerate the whole product space
//! and share no search code with the library.

#![allow(dead_code)]

use std::path::PathBuf;

use cfx_core::classifiers::{load_decision_tree, Classifier, ClassifierHandle};
use cfx_core::engine::Minimality;
use cfx_core::model::{Entity, FeatureDef, FeatureSchema};
use cfx_core::speclang::{parse_formula, parse_spec, Constraint, EvalContext, Formula, SpecDocument};
use rand::seq::SliceRandom;
use rand::Rng;

pub const CFX: &str = env!("CARGO_BIN_EXE_cfx");
pub const STUB: &str = env!("CARGO_BIN_EXE_cfx-stub-classifier");

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub struct Loan {
    pub doc: SpecDocument,
    pub e0: Entity,
    pub tree: ClassifierHandle,
}

impl Loan {
    pub fn schema(&self) -> &FeatureSchema {
        self.doc.schema()
    }
}

pub fn loan() -> Loan {
    let doc = parse_spec(&fixture_text("loan.cfx")).unwrap();
    let tree = load_decision_tree(&fixture_text("loan_tree.json"), doc.schema()).unwrap();
    let e0 = doc.entity("e0").unwrap().clone();
    Loan { doc, e0, tree }
}

/// `L = 1` iff `F1 = 1 and F2 = 1`, explained at `(0, 0)`.
pub fn and_fixture() -> (FeatureSchema, Entity, ClassifierHandle) {
    let schema = binary_schema(2);
    let e = Entity::from_values(&schema, vec![0, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&schema, vec!["0".into(), "1".into()], |x| {
        usize::from(x.value(0) == 1 && x.value(1) == 1)
    });
    (schema, e, c)
}

pub fn binary_schema(n: usize) -> FeatureSchema {
    FeatureSchema::new(
        (1..=n)
            .map(|i| FeatureDef::new(format!("F{i}"), ["0", "1"], false))
            .collect(),
    )
    .unwrap()
}

pub struct Instance {
    pub schema: FeatureSchema,
    pub entity: Entity,
    pub classifier: ClassifierHandle,
    /// Label index of every entity, keyed by the entity itself.
    pub labels: std::collections::HashMap<Entity, usize>,
}

const NAMES: &[&str] = &["zeta", "Alpha", "beta", "Gamma", "delta", "Eps", "eta", "Theta", "iota", "Kappa"];
const VALUES: &[&str] = &["r", "q", "p", "s", "u", "t"];

/// Random schema with shuffled names (so name order differs from schema
/// order) and shuffled value tokens.
pub fn random_schema(rng: &mut impl Rng, n: usize, max_domain: usize, min_domain: usize) -> FeatureSchema {
    let mut names: Vec<&str> = NAMES.to_vec();
    names.shuffle(rng);
    let defs = names[..n]
        .iter()
        .map(|name| {
            let d = rng.gen_range(min_domain..=max_domain);
            let mut values: Vec<&str> = VALUES.to_vec();
            values.shuffle(rng);
            FeatureDef::new(*name, values[..d].to_vec(), rng.gen_bool(0.5))
        })
        .collect();
    FeatureSchema::new(defs).unwrap()
}

pub fn random_instance(rng: &mut impl Rng, max_features: usize, max_domain: usize) -> Instance {
    let n = rng.gen_range(1..=max_features);
    let schema = random_schema(rng, n, max_domain, 1);
    let classes: Vec<String> = ["yes", "no", "maybe"][..rng.gen_range(1..=3)]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let k = classes.len();
    let bias = rng.gen_range(0.2..0.8);
    let mut labels = std::collections::HashMap::new();
    for x in schema.entities() {
        let l = if rng.gen_bool(bias) { 0 } else { rng.gen_range(0..k) };
        labels.insert(x, l);
    }
    let classifier = ClassifierHandle::tabulate(&schema, classes, |x| labels[x]);
    let entity = random_entity(rng, &schema);
    Instance {
        schema,
        entity,
        classifier,
        labels,
    }
}

pub fn random_entity(rng: &mut impl Rng, schema: &FeatureSchema) -> Entity {
    let values = (0..schema.len())
        .map(|f| rng.gen_range(0..schema.domain_size(f)))
        .collect();
    Entity::from_values(schema, values).unwrap()
}

fn quote(token: &str) -> String {
    format!("\"{token}\"")
}

/// Random formula text over the schema and class list.
pub fn random_formula_text(rng: &mut impl Rng, schema: &FeatureSchema, classes: &[String], depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.35) {
        let f = rng.gen_range(0..schema.len());
        let name = &schema.feature(f).name;
        let v = rng.gen_range(0..schema.domain_size(f));
        let value = quote(schema.value_name(f, v));
        let op = if rng.gen_bool(0.5) { "=" } else { "!=" };
        return match rng.gen_range(0..4) {
            0 => format!("changed({name})"),
            1 => format!("{name} {op} {value}"),
            2 => format!("orig({name}) {op} {value}"),
            _ => format!("label {op} {}", quote(&classes[rng.gen_range(0..classes.len())])),
        };
    }
    let a = random_formula_text(rng, schema, classes, depth - 1);
    let b = random_formula_text(rng, schema, classes, depth - 1);
    match rng.gen_range(0..4) {
        0 => format!("not ({a})"),
        1 => format!("({a}) and ({b})"),
        2 => format!("({a}) or ({b})"),
        _ => format!("({a}) -> ({b})"),
    }
}

pub fn random_formula(rng: &mut impl Rng, schema: &FeatureSchema, classes: &[String], depth: usize) -> Formula {
    let text = random_formula_text(rng, schema, classes, depth);
    parse_formula(&text, schema, Some(classes)).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn random_constraint(rng: &mut impl Rng, schema: &FeatureSchema, classes: &[String]) -> Constraint {
    let ordered: Vec<usize> = (0..schema.len()).filter(|&f| schema.feature(f).ordered).collect();
    if !ordered.is_empty() && rng.gen_bool(0.2) {
        let f = ordered[rng.gen_range(0..ordered.len())];
        return if rng.gen_bool(0.5) {
            Constraint::OnlyIncrease(f)
        } else {
            Constraint::OnlyDecrease(f)
        };
    }
    Constraint::Formula(random_formula(rng, schema, classes, 2))
}

/// One admissible counterfactual as seen by the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteModel {
    pub changes: Vec<(usize, usize)>,
    pub result: Entity,
    pub label: String,
}

fn name_key(schema: &FeatureSchema, f: usize) -> &str {
    &schema.feature(f).name
}

/// Every admissible counterfactual of `e` by scanning the product space,
/// sorted by size, then changed feature names, then value positions.
pub fn brute_admissible(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    constraints: &[Constraint],
    target: Option<&str>,
) -> Vec<BruteModel> {
    let original = classifier.classify(e).unwrap();
    let mut out = Vec::new();
    for x in schema.entities() {
        if &x == e {
            continue;
        }
        let l = classifier.classify(&x).unwrap();
        let ok = match target {
            Some(t) => classifier.label(l) == t,
            None => l != original,
        };
        if !ok {
            continue;
        }
        let label = classifier.label(l).to_owned();
        let ctx = EvalContext {
            original: e,
            counterfactual: &x,
            label: &label,
        };
        if !constraints.iter().all(|c| c.eval(&ctx)) {
            continue;
        }
        let mut changed: Vec<usize> = (0..schema.len()).filter(|&f| x.value(f) != e.value(f)).collect();
        changed.sort_by(|&a, &b| name_key(schema, a).cmp(name_key(schema, b)));
        out.push(BruteModel {
            changes: changed.iter().map(|&f| (f, x.value(f))).collect(),
            result: x,
            label,
        });
    }
    out.sort_by(|a, b| {
        let key = |m: &BruteModel| {
            (
                m.changes.len(),
                m.changes.iter().map(|&(f, _)| name_key(schema, f).to_owned()).collect::<Vec<_>>(),
                m.changes.iter().map(|&(_, v)| v).collect::<Vec<_>>(),
            )
        };
        key(a).cmp(&key(b))
    });
    out
}

fn changed_set(m: &BruteModel) -> Vec<usize> {
    let mut s: Vec<usize> = m.changes.iter().map(|&(f, _)| f).collect();
    s.sort_unstable();
    s
}

/// Filters `all` (already canonical) by a minimality criterion.
pub fn brute_minimal(all: &[BruteModel], minimality: Minimality) -> Vec<BruteModel> {
    match minimality {
        Minimality::None => all.to_vec(),
        Minimality::Cardinality => {
            let Some(min) = all.iter().map(|m| m.changes.len()).min() else {
                return vec![];
            };
            all.iter().filter(|m| m.changes.len() == min).cloned().collect()
        }
        Minimality::Subset => {
            let sets: Vec<Vec<usize>> = all.iter().map(changed_set).collect();
            all.iter()
                .zip(&sets)
                .filter(|(_, s)| {
                    !sets
                        .iter()
                        .any(|t| t.len() < s.len() && t.iter().all(|f| s.contains(f)))
                })
                .map(|(m, _)| m.clone())
                .collect()
        }
    }
}

/// Engine output in the oracle's shape.
pub fn as_brute(set: &cfx_core::engine::ModelSet) -> Vec<BruteModel> {
    set.models
        .iter()
        .map(|m| BruteModel {
            changes: m.intervention.changes().to_vec(),
            result: m.result.clone(),
            label: m.label.clone(),
        })
        .collect()
}

pub fn run_cfx(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(CFX)
        .args(args)
        .current_dir(fixture(""))
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// `external:` classifier reference that serves `model` through the stub.
pub fn stub_ref(spec: &str, model: &str, extra: &str) -> String {
    let spec = fixture(spec);
    let model = match model.split_once(':') {
        Some((kind, path)) => format!("{kind}:{}", fixture(path).display()),
        None => unreachable!("model refs are KIND:PATH"),
    };
    format!("external:{STUB} --spec {} --model {model} {extra}", spec.display())
}

fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], size - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

/// Every way of moving each feature of `gamma` off its value in `e`.
fn reassignments(schema: &FeatureSchema, e: &Entity, gamma: &[usize]) -> Vec<Entity> {
    let mut out = vec![e.clone()];
    for &g in gamma {
        out = out
            .into_iter()
            .flat_map(|x| {
                (0..schema.domain_size(g))
                    .filter(|&v| v != e.value(g))
                    .map(move |v| x.with_value(g, v))
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

fn admissible(e: &Entity, x: &Entity, label: &str, constraints: &[Constraint]) -> bool {
    let ctx = EvalContext {
        original: e,
        counterfactual: x,
        label,
    };
    constraints.iter().all(|c| c.eval(&ctx))
}

/// Flips of `feature` on top of the label-preserving contingency `x`
/// that change the label and satisfy the constraints.
fn flips(
    schema: &FeatureSchema,
    e: &Entity,
    x: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    constraints: &[Constraint],
) -> Vec<usize> {
    let original = classifier.classify(e).unwrap();
    (0..schema.domain_size(feature))
        .filter(|&v| v != e.value(feature))
        .filter(|&v| {
            let y = x.with_value(feature, v);
            let l = classifier.classify(&y).unwrap();
            l != original && admissible(e, &y, classifier.label(l), constraints)
        })
        .collect()
}

/// Smallest contingency size (at most `k`) that makes `feature` flip the
/// label of `e`, scanning subsets directly.
pub fn brute_contingency_size(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    k: usize,
    constraints: &[Constraint],
) -> Option<usize> {
    let original = classifier.classify(e).unwrap();
    let others: Vec<usize> = (0..schema.len()).filter(|&f| f != feature).collect();
    (0..=k.min(others.len())).find(|&s| {
        subsets(&others, s).iter().any(|gamma| {
            reassignments(schema, e, gamma).iter().any(|x| {
                classifier.classify(x).unwrap() == original
                    && !flips(schema, e, x, classifier, feature, constraints).is_empty()
            })
        })
    })
}

pub fn brute_xresp(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    k: usize,
    constraints: &[Constraint],
) -> f64 {
    brute_contingency_size(schema, e, classifier, feature, k, constraints).map_or(0.0, |s| 1.0 / (1 + s) as f64)
}

/// Largest marginal flip mass over contingencies of the smallest working
/// size, divided by `1 + size`.
pub fn brute_resp(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    feature: usize,
    k: usize,
    constraints: &[Constraint],
    marginal: impl Fn(usize, usize) -> f64,
) -> f64 {
    let original = classifier.classify(e).unwrap();
    let others: Vec<usize> = (0..schema.len()).filter(|&f| f != feature).collect();
    for s in 0..=k.min(others.len()) {
        let mut best = 0.0f64;
        for gamma in subsets(&others, s) {
            for x in reassignments(schema, e, &gamma) {
                if classifier.classify(&x).unwrap() != original {
                    continue;
                }
                let mass: f64 = flips(schema, e, &x, classifier, feature, constraints)
                    .into_iter()
                    .map(|v| marginal(feature, v))
                    .sum();
                best = best.max(mass);
            }
        }
        if best > 0.0 {
            return best / (1 + s) as f64;
        }
    }
    0.0
}

/// Shapley values from the permutation definition, with `v(S)` computed by
/// enumerating the whole product space (product marginals) or the rows
/// (empirical sample with fixed coordinates overwritten).
pub fn permutation_shapley(
    schema: &FeatureSchema,
    e: &Entity,
    classifier: &dyn Classifier,
    marginals: Option<&[Vec<f64>]>,
    rows: Option<(&[Entity], &[f64])>,
) -> Vec<f64> {
    let n = schema.len();
    let payoff = classifier.classify(e).unwrap();
    let all: Vec<Entity> = schema.entities().collect();
    let value = |fixed: &[bool]| -> f64 {
        match (marginals, rows) {
            (Some(m), _) => all
                .iter()
                .filter(|x| (0..n).all(|f| !fixed[f] || x.value(f) == e.value(f)))
                .filter(|x| classifier.classify(x).unwrap() == payoff)
                .map(|x| (0..n).filter(|&f| !fixed[f]).map(|f| m[f][x.value(f)]).product::<f64>())
                .sum(),
            (None, Some((rows, weights))) => {
                let total: f64 = weights.iter().sum();
                rows.iter()
                    .zip(weights)
                    .filter(|(r, _)| {
                        let mut x = (*r).clone();
                        for f in (0..n).filter(|&f| fixed[f]) {
                            x = x.with_value(f, e.value(f));
                        }
                        classifier.classify(&x).unwrap() == payoff
                    })
                    .map(|(_, w)| w)
                    .sum::<f64>()
                    / total
            }
            _ => unreachable!("needs a distribution"),
        }
    };
    let mut phi = vec![0.0; n];
    let mut perms = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    permute(&mut order, 0, &mut |pi| {
        perms += 1;
        let mut fixed = vec![false; n];
        let mut before = value(&fixed);
        for &i in pi {
            fixed[i] = true;
            let after = value(&fixed);
            phi[i] += after - before;
            before = after;
        }
    });
    phi.iter().map(|p| p / perms as f64).collect()
}

fn permute(items: &mut Vec<usize>, at: usize, visit: &mut dyn FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}
