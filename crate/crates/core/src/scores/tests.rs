use num_rational::BigRational;

use super::*;
use crate::classifiers::ClassifierHandle;
use crate::model::FeatureDef;
use crate::speclang::parse_formula;

fn binary(n: usize) -> FeatureSchema {
    FeatureSchema::new(
        (1..=n)
            .map(|i| FeatureDef::new(format!("F{i}"), ["0", "1"], false))
            .collect(),
    )
    .unwrap()
}

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

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

#[test]
fn loan_xresp_and_resp() {
    let (s, e, t) = loan();
    let cfg = ResponsibilityConfig::default();
    let x: Vec<f64> = (0..3)
        .map(|f| xresp_score::<f64>(&s, &e, &t, f, &cfg).unwrap().value)
        .collect();
    assert_eq!(x, [1.0, 1.0, 0.0]);
    let dist = PopulationDistribution::<BigRational>::uniform(&s);
    let r = resp_score(&s, &e, &t, 0, &dist, &cfg).unwrap();
    assert_eq!(r.value, ratio(1, 3));
    assert_eq!(r.contingency_size, Some(0));
}

#[test]
fn and_fixture_lattice() {
    let s = binary(2);
    let e = Entity::from_values(&s, vec![0, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&s, vec!["0".into(), "1".into()], |x| {
        usize::from(x.value(0) == 1 && x.value(1) == 1)
    });
    let cfg = ResponsibilityConfig::default();
    let x = xresp_score::<BigRational>(&s, &e, &c, 0, &cfg).unwrap();
    assert_eq!(x.value, ratio(1, 2));
    let w = x.witness.clone().unwrap();
    assert_eq!(w.contingency, vec![(1, 1)]);
    assert!(w.verify(&s, &e, &c, 0, &[]).unwrap());
    let r = resp_score::<BigRational>(&s, &e, &c, 0, &PopulationDistribution::uniform(&s), &cfg).unwrap();
    assert_eq!(r.value, ratio(1, 4));
    let oracle = oracle_xresp::<BigRational>(&s, &e, &c, 0, 2, &[]).unwrap();
    assert_eq!(oracle, x);
}

#[test]
fn k_bounds_contingency() {
    let s = binary(2);
    let e = Entity::from_values(&s, vec![0, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&s, vec!["0".into(), "1".into()], |x| {
        usize::from(x.value(0) == 1 && x.value(1) == 1)
    });
    let cfg = ResponsibilityConfig {
        k: 0,
        ..ResponsibilityConfig::default()
    };
    let x = xresp_score::<f64>(&s, &e, &c, 0, &cfg).unwrap();
    assert_eq!(x.value, 0.0);
    assert!(x.witness.is_none());
}

#[test]
fn constraints_apply_to_flipped_entity() {
    let (s, e, t) = loan();
    let no_city = parse_formula("not changed(City)", &s, None).unwrap();
    let cfg = ResponsibilityConfig {
        constraints: vec![Constraint::Formula(no_city)],
        ..ResponsibilityConfig::default()
    };
    assert_eq!(xresp_score::<f64>(&s, &e, &t, 0, &cfg).unwrap().value, 0.0);
    assert_eq!(xresp_score::<f64>(&s, &e, &t, 1, &cfg).unwrap().value, 1.0);
}

#[test]
fn indicator_shap() {
    let s = binary(2);
    let e = Entity::from_values(&s, vec![1, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&s, vec!["0".into(), "1".into()], |x| x.value(0));
    let cfg = ShapConfig::new(PopulationDistribution::<BigRational>::uniform(&s));
    let phi = shap_exact(&s, &e, &c, &cfg).unwrap();
    assert_eq!(phi[0].value, ratio(1, 2));
    assert_eq!(phi[1].value, ratio(0, 1));
    assert_eq!(characteristic_value(&s, &e, &c, &[], &cfg).unwrap(), ratio(1, 2));
    assert_eq!(characteristic_value(&s, &e, &c, &[0, 1], &cfg).unwrap(), ratio(1, 1));
}

#[test]
fn empirical_single_row() {
    let s = binary(2);
    let e = Entity::from_values(&s, vec![1, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&s, vec!["0".into(), "1".into()], |x| x.value(0));
    let row = Entity::from_values(&s, vec![0, 1]).unwrap();
    let dist = PopulationDistribution::<f64>::empirical(&s, vec![row], None).unwrap();
    let cfg = ShapConfig::new(dist);
    assert_eq!(characteristic_value(&s, &e, &c, &[], &cfg).unwrap(), 0.0);
    assert_eq!(characteristic_value(&s, &e, &c, &[0], &cfg).unwrap(), 1.0);
}

#[test]
fn shap_caps() {
    let s = binary(3);
    let e = Entity::from_values(&s, vec![0, 0, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&s, vec!["0".into()], |_| 0);
    let mut cfg = ShapConfig::new(PopulationDistribution::<f64>::uniform(&s));
    cfg.feature_cap = 2;
    assert_eq!(
        shap_exact(&s, &e, &c, &cfg),
        Err(ScoreError::FeatureCapExceeded { features: 3, cap: 2 })
    );
    cfg.feature_cap = 16;
    cfg.expectation_budget = 4;
    assert_eq!(
        shap_exact(&s, &e, &c, &cfg),
        Err(ScoreError::ExpectationBudgetExceeded { required: 8, budget: 4 })
    );
}

#[test]
fn report_rows() {
    let (s, e, t) = loan();
    let opts = ReportOptions::new(ScoreKind::ALL.to_vec(), PopulationDistribution::<f64>::uniform(&s));
    let r = score_report(&s, &e, &t, &opts).unwrap();
    assert_eq!(r.original_label, "reject");
    assert_eq!(r.minimal_size, Some(1));
    assert_eq!(r.minimal_count, 2);
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.rows[2].xresp.as_ref().unwrap().value, 0.0);
    assert!(r.rows.iter().all(|row| row.shap.is_some() && row.resp.is_some()));
    let none = ReportOptions::new(vec![], PopulationDistribution::<f64>::uniform(&s));
    assert_eq!(score_report(&s, &e, &t, &none), Err(ScoreError::NoScoreSelected));
}

#[test]
fn constant_classifier_scores_zero() {
    let (s, e, _) = loan();
    let c = ClassifierHandle::tabulate(&s, vec!["yes".into()], |_| 0);
    let cfg = ResponsibilityConfig::default();
    for f in 0..3 {
        assert_eq!(xresp_score::<f64>(&s, &e, &c, f, &cfg).unwrap().value, 0.0);
    }
}

#[test]
fn oracle_refuses_large_spaces() {
    let s = binary(21);
    let e = Entity::from_values(&s, vec![0; 21]).unwrap();
    let c = ClassifierHandle::tabulate(&binary(1), vec!["0".into()], |_| 0);
    assert!(matches!(
        oracle_xresp::<f64>(&s, &e, &c, 0, 2, &[]),
        Err(ScoreError::OracleSpaceTooLarge { .. })
    ));
}

#[test]
fn resp_can_rise_when_a_constraint_removes_cheap_flips() {
    // L = 1 iff A = a1, or B = b1 and A != a0; explained at (a0, b0)
    let s = FeatureSchema::new(vec![
        FeatureDef::new("A", ["a0", "a1", "a2", "a3"], false),
        FeatureDef::new("B", ["b0", "b1"], false),
    ])
    .unwrap();
    let e = Entity::from_values(&s, vec![0, 0]).unwrap();
    let c = ClassifierHandle::tabulate(&s, vec!["0".into(), "1".into()], |x| {
        usize::from(x.value(0) == 1 || (x.value(1) == 1 && x.value(0) != 0))
    });
    let dist = PopulationDistribution::<BigRational>::uniform(&s);
    let free = ResponsibilityConfig::default();
    let forced = ResponsibilityConfig {
        constraints: vec![Constraint::Formula(parse_formula("changed(B)", &s, None).unwrap())],
        ..ResponsibilityConfig::default()
    };
    let before = resp_score(&s, &e, &c, 0, &dist, &free).unwrap();
    let after = resp_score(&s, &e, &c, 0, &dist, &forced).unwrap();
    assert_eq!((before.value, before.contingency_size), (ratio(1, 4), Some(0)));
    assert_eq!((after.value, after.contingency_size), (ratio(3, 8), Some(1)));
    let x_before = xresp_score::<BigRational>(&s, &e, &c, 0, &free).unwrap().value;
    let x_after = xresp_score::<BigRational>(&s, &e, &c, 0, &forced).unwrap().value;
    assert_eq!((x_before, x_after), (ratio(1, 1), ratio(1, 2)));
}
