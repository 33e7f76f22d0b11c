use std::io::{BufRead, Write};

use crate::classifiers::Classifier;
use crate::engine::{answer_query, minimal_counterfactuals, CipConfig, QueryMode};
use crate::speclang::parse_formula;

use super::args::OutputFormat;
use super::load::Session;
use super::{CliError, EXIT_OK};

pub const PROMPT: &str = "cfx> ";

fn split(line: &str) -> Option<(QueryMode, &str)> {
    if let Some(rest) = line.strip_prefix("brave?") {
        Some((QueryMode::Brave, rest.trim()))
    } else {
        line.strip_prefix("cautious?")
            .map(|rest| (QueryMode::Cautious, rest.trim()))
    }
}

/// Answers queries line by line against one cached minimal model set.
/// The prompt and per-line errors go to `err`; answers go to `out`.
pub(crate) fn run(
    session: &Session,
    cip: &CipConfig,
    format: OutputFormat,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let schema = session.doc.schema();
    let classifier = session.classifier(0);
    let set = minimal_counterfactuals(schema, &session.entity, classifier, cip)?;
    let io = |e: std::io::Error| CliError::Runtime {
        kind: "IoError",
        message: e.to_string(),
    };
    let mut line = String::new();
    loop {
        write!(err, "{PROMPT}").and_then(|_| err.flush()).map_err(io)?;
        line.clear();
        if input.read_line(&mut line).map_err(io)? == 0 {
            break;
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text == "quit" {
            break;
        }
        let Some((mode, formula)) = split(text) else {
            writeln!(err, "error: usage: prefix the formula with `brave?` or `cautious?`").map_err(io)?;
            continue;
        };
        let answer = parse_formula(formula, schema, Some(classifier.classes()))
            .map_err(CliError::from)
            .and_then(|q| answer_query(&set, &q, mode).map_err(CliError::from));
        match answer {
            Ok(a) => {
                let rendered = super::render::repl_answer(session, &a, format);
                out.write_all(rendered.as_bytes()).and_then(|_| out.flush()).map_err(io)?;
            }
            Err(e) => writeln!(err, "error: {e}").map_err(io)?,
        }
    }
    Ok(EXIT_OK)
}
