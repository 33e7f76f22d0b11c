use super::*;
use crate::classifiers::ClassifierHandle;
use crate::model::FeatureDef;
use crate::speclang::{parse_formula, Formula};

fn loan() -> (FeatureSchema, Entity, ClassifierHandle) {
    let schema = FeatureSchema::new(vec![
        FeatureDef::new("City", ["bronx", "brooklyn", "queens"], false),
        FeatureDef::new("Salary", ["low", "mid", "high"], true),
        FeatureDef::new("Age", ["young", "old"], false),
    ])
    .unwrap();
    let e = Entity::from_values(&schema, vec![0, 1, 0]).unwrap();
    let t = ClassifierHandle::tabulate(&schema, vec!["accept".into(), "reject".into()], |x| {
        usize::from(!(x.value(1) == 2 || x.value(0) == 2))
    });
    (schema, e, t)
}

fn and_fixture() -> (FeatureSchema, Entity, ClassifierHandle) {
    let schema = FeatureSchema::new(vec![
        FeatureDef::new("F1", ["0", "1"], false),
        FeatureDef::new("F2", ["0", "1"], false),
    ])
    .unwrap();
    let e = Entity::from_values(&schema, vec![0, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&schema, vec!["0".into(), "1".into()], |x| {
        usize::from(x.value(0) == 1 && x.value(1) == 1)
    });
    (schema, e, c)
}

fn rendered(schema: &FeatureSchema, set: &ModelSet) -> Vec<String> {
    set.models
        .iter()
        .map(|m| m.intervention.display(schema).to_string())
        .collect()
}

fn immutable(schema: &FeatureSchema, feature: &str) -> Constraint {
    Constraint::Formula(parse_formula(&format!("not changed({feature})"), schema, None).unwrap())
}

fn query(schema: &FeatureSchema, text: &str) -> Formula {
    parse_formula(text, schema, None).unwrap()
}

#[test]
fn loan_minimal_models() {
    let (s, e, t) = loan();
    let set = minimal_counterfactuals(&s, &e, &t, &CipConfig::default()).unwrap();
    assert_eq!(rendered(&s, &set), ["{City->queens}", "{Salary->high}"]);
    assert_eq!(set.original_label, "reject");
    assert!(set.exhausted);
    assert_eq!(set.min_size(), Some(1));
    assert!(set.models.iter().all(|m| m.label == "accept"));
}

#[test]
fn loan_subset_minimal_models() {
    let (s, e, t) = loan();
    let cfg = CipConfig {
        minimality: Minimality::Subset,
        ..CipConfig::default()
    };
    let set = minimal_counterfactuals(&s, &e, &t, &cfg).unwrap();
    assert_eq!(set.changed_sets(), vec![vec![0], vec![1]]);
}

#[test]
fn enumeration_is_canonical_and_complete() {
    let (s, e, t) = loan();
    let set = enumerate_counterfactuals(&s, &e, &t, &CipConfig::default()).unwrap();
    let mut brute = Vec::new();
    for x in s.entities() {
        if x != e && t.classify(&x).unwrap() != 1 {
            brute.push(x);
        }
    }
    assert_eq!(set.len(), brute.len());
    for w in set.models.windows(2) {
        assert!(w[0].intervention.canonical_cmp(&w[1].intervention, &s).is_lt());
    }
    assert_eq!(set.visited, s.space_size() - 1);
}

#[test]
fn and_fixture_needs_two_changes() {
    let (s, e, c) = and_fixture();
    let cfg = CipConfig {
        target: Some("1".into()),
        ..CipConfig::default()
    };
    let set = minimal_counterfactuals(&s, &e, &c, &cfg).unwrap();
    assert_eq!(rendered(&s, &set), ["{F1->1, F2->1}"]);
    let set = max_responsibility_counterfactuals(&s, &e, &c, &cfg).unwrap();
    assert_eq!(set.min_size(), Some(2));
}

#[test]
fn constant_classifier_has_no_models() {
    let (s, e, _) = loan();
    let c = ClassifierHandle::tabulate(&s, vec!["yes".into(), "no".into()], |_| 0);
    let set = minimal_counterfactuals(&s, &e, &c, &CipConfig::default()).unwrap();
    assert!(set.is_empty());
    let ans = answer_query(&set, &query(&s, "changed(City)"), QueryMode::Cautious).unwrap();
    assert_eq!(ans.status, QueryStatus::NoModels);
}

#[test]
fn target_errors() {
    let (s, e, t) = loan();
    let mut cfg = CipConfig {
        target: Some("reject".into()),
        ..CipConfig::default()
    };
    assert!(matches!(
        minimal_counterfactuals(&s, &e, &t, &cfg),
        Err(EngineError::InvalidTarget(_))
    ));
    cfg.target = Some("maybe".into());
    assert!(matches!(
        minimal_counterfactuals(&s, &e, &t, &cfg),
        Err(EngineError::UnknownClass(_))
    ));
}

#[test]
fn immutable_city_leaves_salary() {
    let (s, e, t) = loan();
    let cfg = CipConfig {
        constraints: vec![immutable(&s, "City")],
        ..CipConfig::default()
    };
    let set = minimal_counterfactuals(&s, &e, &t, &cfg).unwrap();
    assert_eq!(rendered(&s, &set), ["{Salary->high}"]);
    let q = query(&s, "changed(Salary)");
    let ans = answer_query(&set, &q, QueryMode::Cautious).unwrap();
    assert_eq!(ans.status, QueryStatus::True);
}

#[test]
fn loan_queries() {
    let (s, e, t) = loan();
    let set = minimal_counterfactuals(&s, &e, &t, &CipConfig::default()).unwrap();
    let q = query(&s, "changed(City)");
    let brave = answer_query(&set, &q, QueryMode::Brave).unwrap();
    assert_eq!(brave.status, QueryStatus::True);
    assert_eq!(brave.witnesses.len(), 1);
    let cautious = answer_query(&set, &q, QueryMode::Cautious).unwrap();
    assert_eq!(cautious.status, QueryStatus::False);
    assert_eq!(cautious.witnesses[0].intervention.display(&s).to_string(), "{Salary->high}");
    let both = query(&s, "changed(City) and changed(Salary)");
    assert_eq!(answer_query(&set, &both, QueryMode::Brave).unwrap().status, QueryStatus::False);
}

#[test]
fn query_rejects_unknown_class() {
    let (s, e, t) = loan();
    let set = minimal_counterfactuals(&s, &e, &t, &CipConfig::default()).unwrap();
    let q = query(&s, "label = maybe");
    assert!(matches!(
        answer_query(&set, &q, QueryMode::Brave),
        Err(EngineError::UnknownClass(_))
    ));
}

#[test]
fn budget_truncates_or_fails() {
    let (s, e, t) = loan();
    let cfg = CipConfig {
        minimality: Minimality::None,
        budget: 3,
        ..CipConfig::default()
    };
    let set = minimal_counterfactuals(&s, &e, &t, &cfg).unwrap();
    assert!(!set.exhausted);
    assert_eq!(set.visited, 3);
    let strict = CipConfig { strict: true, ..cfg };
    assert!(matches!(
        minimal_counterfactuals(&s, &e, &t, &strict),
        Err(EngineError::BudgetExceeded { budget: 3 })
    ));
}

#[test]
fn parallel_results_match() {
    let (s, e, t) = loan();
    let seq = enumerate_counterfactuals(&s, &e, &t, &CipConfig::default()).unwrap();
    let par = CipConfig {
        parallelism: 4,
        ..CipConfig::default()
    };
    assert_eq!(enumerate_counterfactuals(&s, &e, &t, &par).unwrap(), seq);
}

#[test]
fn compare_reports_differences() {
    let (s, e, t) = loan();
    let salary_only = ClassifierHandle::tabulate(&s, vec!["accept".into(), "reject".into()], |x| {
        usize::from(x.value(1) != 2)
    });
    let r = compare_classifiers(&s, &e, &t, &salary_only, &CipConfig::default(), 2).unwrap();
    assert_eq!(r.only_a.len(), 1);
    assert!(r.only_b.is_empty());
    assert_eq!(r.features[0].delta, -1.0);
    let other = ClassifierHandle::tabulate(&s, vec!["yes".into(), "no".into()], |_| 0);
    assert!(matches!(
        compare_classifiers(&s, &e, &t, &other, &CipConfig::default(), 2),
        Err(EngineError::ClassMismatch { .. })
    ));
}

#[test]
fn minimality_parses() {
    assert_eq!("card".parse::<Minimality>().unwrap(), Minimality::Cardinality);
    assert_eq!("subset".parse::<Minimality>().unwrap(), Minimality::Subset);
    assert!("fewest".parse::<Minimality>().is_err());
    assert_eq!(Minimality::Cardinality.to_string(), "card");
}
