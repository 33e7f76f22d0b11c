use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::engine::{ComparisonReport, ModelSet, QueryAnswer};
use crate::model::{CounterfactualModel, Entity, FeatureSchema};
use crate::scores::{ScoreRecord, ScoreReport, Witness};
use crate::speclang::Formula;

use super::args::{CommonArgs, OutputFormat};
use super::load::Session;

fn entity_json(schema: &FeatureSchema, e: &Entity) -> Value {
    let map: Map<String, Value> = e
        .tokens(schema)
        .into_iter()
        .map(|(f, v)| (f.to_owned(), Value::from(v)))
        .collect();
    Value::Object(map)
}

fn changes_json(schema: &FeatureSchema, changes: &[(usize, usize)]) -> Value {
    let map: Map<String, Value> = changes
        .iter()
        .map(|&(f, v)| {
            (
                schema.feature(f).name.clone(),
                Value::from(schema.value_name(f, v)),
            )
        })
        .collect();
    Value::Object(map)
}

fn changes_text(schema: &FeatureSchema, changes: &[(usize, usize)]) -> String {
    let parts: Vec<String> = changes
        .iter()
        .map(|&(f, v)| format!("{}->{}", schema.feature(f).name, schema.value_name(f, v)))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

fn feature_set_text(schema: &FeatureSchema, features: &[usize]) -> String {
    let names: Vec<&str> = features.iter().map(|&f| schema.feature(f).name.as_str()).collect();
    format!("{{{}}}", names.join(", "))
}

fn model_json(schema: &FeatureSchema, m: &CounterfactualModel) -> Value {
    json!({
        "size": m.size(),
        "changes": changes_json(schema, m.intervention.changes()),
        "result": entity_json(schema, &m.result),
        "label": m.label,
    })
}

/// Left-aligned columns separated by two spaces, no trailing blanks.
fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                s.push_str(cell);
            } else {
                let pad = widths[i] - cell.chars().count();
                s.push_str(cell);
                s.push_str(&" ".repeat(pad + 2));
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

fn models_table(out: &mut String, schema: &FeatureSchema, models: &[CounterfactualModel]) {
    let rows: Vec<Vec<String>> = models
        .iter()
        .map(|m| {
            vec![
                m.size().to_string(),
                m.intervention.display(schema).to_string(),
                m.result.display(schema).to_string(),
                m.label.clone(),
            ]
        })
        .collect();
    table(out, &["size", "changes", "result", "label"], &rows);
}

fn json_text(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn header(out: &mut String, session: &Session) {
    let schema = session.doc.schema();
    let _ = writeln!(
        out,
        "entity: {} {}",
        session.entity_name,
        session.entity.display(schema)
    );
}

pub(crate) fn counterfactuals(session: &Session, set: &ModelSet, format: OutputFormat) -> String {
    let schema = session.doc.schema();
    match format {
        OutputFormat::Json => json_text(json!({
            "command": "counterfactuals",
            "entity": session.entity_name,
            "original": entity_json(schema, &set.original),
            "label": set.original_label,
            "minimality": set.minimality.to_string(),
            "exhausted": set.exhausted,
            "visited": set.visited,
            "models": set.models.iter().map(|m| model_json(schema, m)).collect::<Vec<_>>(),
        })),
        OutputFormat::Table => {
            let mut out = String::new();
            header(&mut out, session);
            let _ = writeln!(out, "label: {}", set.original_label);
            let _ = writeln!(out, "minimality: {}", set.minimality);
            let _ = writeln!(out, "exhausted: {}", set.exhausted);
            let _ = writeln!(out, "visited: {}", set.visited);
            let _ = writeln!(out, "models: {}", set.len());
            if !set.is_empty() {
                out.push('\n');
                models_table(&mut out, schema, &set.models);
            }
            out
        }
    }
}

fn number(v: f64) -> String {
    format!("{v:?}")
}

fn witness_text(schema: &FeatureSchema, feature: usize, w: &Option<Witness>) -> String {
    match w {
        Some(w) => format!(
            "{} then {}->{}",
            changes_text(schema, &w.contingency),
            schema.feature(feature).name,
            schema.value_name(feature, w.flip)
        ),
        None => "-".into(),
    }
}

fn record_json(schema: &FeatureSchema, r: &ScoreRecord<f64>) -> Value {
    let mut map = Map::new();
    map.insert("value".into(), json!(r.value));
    if let Some(w) = &r.witness {
        map.insert("contingency".into(), changes_json(schema, &w.contingency));
        map.insert(
            "flip".into(),
            Value::from(schema.value_name(r.feature, w.flip)),
        );
    }
    if let Some(s) = r.contingency_size {
        map.insert("contingency_size".into(), json!(s));
    }
    map.insert("exhausted".into(), json!(r.exhausted));
    Value::Object(map)
}

fn value_cell(r: &Option<ScoreRecord<f64>>) -> String {
    match r {
        Some(r) if r.exhausted => number(r.value),
        Some(r) => format!("{}?", number(r.value)),
        None => "-".into(),
    }
}

pub(crate) fn score(
    session: &Session,
    report: &ScoreReport<f64>,
    args: &CommonArgs,
    k: usize,
) -> String {
    let schema = session.doc.schema();
    let kinds: Vec<String> = report.scores.iter().map(ToString::to_string).collect();
    match args.format {
        OutputFormat::Json => {
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|row| {
                    let mut map = Map::new();
                    map.insert("feature".into(), Value::from(schema.feature(row.feature).name.clone()));
                    for (name, rec) in [("xresp", &row.xresp), ("resp", &row.resp), ("shap", &row.shap)] {
                        if let Some(r) = rec {
                            map.insert(name.into(), record_json(schema, r));
                        }
                    }
                    Value::Object(map)
                })
                .collect();
            json_text(json!({
                "command": "score",
                "entity": session.entity_name,
                "original": entity_json(schema, &session.entity),
                "label": report.original_label,
                "scores": kinds,
                "k": k,
                "distribution": args.dist.to_string(),
                "minimal": {
                    "size": report.minimal_size,
                    "count": report.minimal_count,
                    "exhausted": report.minimal_exhausted,
                },
                "rows": rows,
            }))
        }
        OutputFormat::Table => {
            let mut out = String::new();
            header(&mut out, session);
            let _ = writeln!(out, "label: {}", report.original_label);
            let _ = writeln!(out, "scores: {}", kinds.join(","));
            let _ = writeln!(out, "k: {k}");
            let _ = writeln!(out, "distribution: {}", args.dist);
            let size = report
                .minimal_size
                .map_or_else(|| "-".to_owned(), |s| s.to_string());
            let _ = writeln!(
                out,
                "minimal: size {size}, count {}, exhausted {}",
                report.minimal_count, report.minimal_exhausted
            );
            out.push('\n');
            let mut head = vec!["feature"];
            let has = |k: &str| kinds.iter().any(|x| x == k);
            if has("xresp") {
                head.extend(["xresp", "xresp_witness"]);
            }
            if has("resp") {
                head.extend(["resp", "resp_witness"]);
            }
            if has("shap") {
                head.push("shap");
            }
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|row| {
                    let mut cells = vec![schema.feature(row.feature).name.clone()];
                    for rec in [&row.xresp, &row.resp] {
                        if let Some(r) = rec {
                            cells.push(value_cell(rec));
                            cells.push(witness_text(schema, row.feature, &r.witness));
                        }
                    }
                    if row.shap.is_some() {
                        cells.push(value_cell(&row.shap));
                    }
                    cells
                })
                .collect();
            table(&mut out, &head, &rows);
            if report
                .rows
                .iter()
                .flat_map(|r| [&r.xresp, &r.resp])
                .any(|r| r.as_ref().is_some_and(|r| !r.exhausted))
            {
                out.push_str("? budget ran out before the search finished\n");
            }
            out
        }
    }
}

pub(crate) fn query(
    session: &Session,
    q: &Formula,
    set: &ModelSet,
    answer: &QueryAnswer,
    format: OutputFormat,
) -> String {
    let schema = session.doc.schema();
    let role = match answer.mode {
        crate::engine::QueryMode::Brave => "witnesses",
        crate::engine::QueryMode::Cautious => "counterexamples",
    };
    match format {
        OutputFormat::Json => json_text(json!({
            "command": "query",
            "entity": session.entity_name,
            "query": q.render(schema),
            "mode": answer.mode.to_string(),
            "status": answer.status.to_string(),
            "minimality": set.minimality.to_string(),
            "models": set.len(),
            "exhausted": set.exhausted,
            role: answer.witnesses.iter().map(|m| model_json(schema, m)).collect::<Vec<_>>(),
        })),
        OutputFormat::Table => {
            let mut out = String::new();
            header(&mut out, session);
            let _ = writeln!(out, "query: {}", q.render(schema));
            let _ = writeln!(out, "mode: {}", answer.mode);
            let _ = writeln!(out, "status: {}", answer.status);
            let _ = writeln!(out, "minimality: {}", set.minimality);
            let _ = writeln!(out, "models: {}", set.len());
            let _ = writeln!(out, "exhausted: {}", set.exhausted);
            let _ = writeln!(out, "{role}: {}", answer.witnesses.len());
            if !answer.witnesses.is_empty() {
                out.push('\n');
                models_table(&mut out, schema, &answer.witnesses);
            }
            out
        }
    }
}

pub(crate) fn repl_answer(session: &Session, answer: &QueryAnswer, format: OutputFormat) -> String {
    let schema = session.doc.schema();
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string(&json!({
                "mode": answer.mode.to_string(),
                "status": answer.status.to_string(),
                "models": answer.witnesses.iter().map(|m| model_json(schema, m)).collect::<Vec<_>>(),
            }))
            .expect("json values serialize");
            s.push('\n');
            s
        }
        OutputFormat::Table => {
            let mut out = format!("{}\n", answer.status);
            for m in &answer.witnesses {
                let _ = writeln!(out, "  {} -> {}", m.intervention.display(schema), m.label);
            }
            out
        }
    }
}

pub(crate) fn compare(session: &Session, r: &ComparisonReport, format: OutputFormat) -> String {
    let schema = session.doc.schema();
    let sets = |v: &[Vec<usize>]| v.iter().map(|s| feature_set_text(schema, s)).collect::<Vec<_>>();
    let names = |v: &[Vec<usize>]| {
        v.iter()
            .map(|s| s.iter().map(|&f| schema.feature(f).name.clone()).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };
    match format {
        OutputFormat::Json => json_text(json!({
            "command": "compare",
            "entity": session.entity_name,
            "original": entity_json(schema, &session.entity),
            "a": {
                "label": r.label_a,
                "models": r.models_a.models.iter().map(|m| model_json(schema, m)).collect::<Vec<_>>(),
                "exhausted": r.models_a.exhausted,
            },
            "b": {
                "label": r.label_b,
                "models": r.models_b.models.iter().map(|m| model_json(schema, m)).collect::<Vec<_>>(),
                "exhausted": r.models_b.exhausted,
            },
            "only_a": names(&r.only_a),
            "only_b": names(&r.only_b),
            "identical": r.is_identical(),
            "features": r.features.iter().map(|f| json!({
                "feature": schema.feature(f.feature).name,
                "xresp_a": f.xresp_a,
                "xresp_b": f.xresp_b,
                "delta": f.delta,
            })).collect::<Vec<_>>(),
        })),
        OutputFormat::Table => {
            let mut out = String::new();
            header(&mut out, session);
            for (tag, label, set) in [("a", &r.label_a, &r.models_a), ("b", &r.label_b, &r.models_b)] {
                let _ = writeln!(
                    out,
                    "{tag}: label {label}, {} models, exhausted {}",
                    set.len(),
                    set.exhausted
                );
            }
            let list = |v: Vec<String>| if v.is_empty() { "-".to_owned() } else { v.join(" ") };
            let _ = writeln!(out, "only_a: {}", list(sets(&r.only_a)));
            let _ = writeln!(out, "only_b: {}", list(sets(&r.only_b)));
            let _ = writeln!(out, "identical: {}", r.is_identical());
            for (tag, set) in [("a", &r.models_a), ("b", &r.models_b)] {
                if !set.is_empty() {
                    let _ = writeln!(out, "\nmodels {tag}:");
                    models_table(&mut out, schema, &set.models);
                }
            }
            out.push('\n');
            let rows: Vec<Vec<String>> = r
                .features
                .iter()
                .map(|f| {
                    vec![
                        schema.feature(f.feature).name.clone(),
                        number(f.xresp_a),
                        number(f.xresp_b),
                        number(f.delta),
                    ]
                })
                .collect();
            table(&mut out, &["feature", "xresp_a", "xresp_b", "delta"], &rows);
            out
        }
    }
}
