//! The `cfx` command line: counterfactuals, scores, queries, classifier
//! comparison and an interactive query loop over one spec file.

mod args;
mod load;
mod render;
mod repl;

use std::ffi::OsString;
use std::io::{BufRead, Write};

use clap::Parser;
use thiserror::Error;

use crate::classifiers::{Classifier, ClassifierError};
use crate::engine::{
    answer_query, compare_classifiers, minimal_counterfactuals, EngineError, QueryStatus,
};
use crate::model::ModelError;
use crate::scores::{score_report, ReportOptions, ScoreError};
use crate::speclang::{parse_formula, SpecError};

pub use args::{Cli, Command, CommonArgs, DistSource, OutputFormat};
pub use load::ClassifierRef;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_NO_MODELS: i32 = 4;

pub const TIMEOUT_ENV: &str = "CFX_TIMEOUT_MS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    /// A lower-level failure, tagged with the name of its error type.
    #[error("{kind}: {message}")]
    Runtime { kind: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Runtime { .. } => EXIT_RUNTIME,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::Runtime {
            kind: "IoError",
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        Self::Runtime {
            kind: "SpecError",
            message: e.to_string(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Runtime {
            kind: "ModelError",
            message: e.to_string(),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        Self::Runtime {
            kind: "ClassifierError",
            message: e.to_string(),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Model(e) => e.into(),
            EngineError::Classifier(e) => e.into(),
            other => Self::Runtime {
                kind: "EngineError",
                message: other.to_string(),
            },
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Engine(e) => e.into(),
            other => Self::Runtime {
                kind: "ScoreError",
                message: other.to_string(),
            },
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Results go to `out`, diagnostics to `err`; returns the exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, input, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs an already parsed invocation.
pub fn execute(
    cli: &Cli,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let common = cli.command.common();
    let session = load::Session::open(common, cli.command.classifier_count())?;
    let schema = session.doc.schema();
    let cip = session.cip_config(common);
    let text = match &cli.command {
        Command::Counterfactuals { common } => {
            let set = minimal_counterfactuals(schema, &session.entity, session.classifier(0), &cip)?;
            render::counterfactuals(&session, &set, common.format)
        }
        Command::Score { common, score, k } => {
            let mut options = ReportOptions::new(args::score_kinds(score)?, session.distribution(common)?);
            options.k = *k;
            options.cip = cip;
            let report = score_report(schema, &session.entity, session.classifier(0), &options)?;
            render::score(&session, &report, common, *k)
        }
        Command::Query {
            common,
            mode,
            formula,
        } => {
            let classifier = session.classifier(0);
            let q = parse_formula(formula, schema, Some(classifier.classes()))?;
            let set = minimal_counterfactuals(schema, &session.entity, classifier, &cip)?;
            let answer = answer_query(&set, &q, *mode)?;
            let text = render::query(&session, &q, &set, &answer, common.format);
            write_out(out, &text)?;
            return Ok(match answer.status {
                QueryStatus::True => EXIT_OK,
                QueryStatus::False => EXIT_FALSE,
                QueryStatus::NoModels => EXIT_NO_MODELS,
            });
        }
        Command::Compare { common, k } => {
            let report = compare_classifiers(
                schema,
                &session.entity,
                session.classifier(0),
                session.classifier(1),
                &cip,
                *k,
            )?;
            render::compare(&session, &report, common.format)
        }
        Command::Repl { common } => {
            return repl::run(&session, &cip, common.format, input, out, err);
        }
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Runtime {
            kind: "IoError",
            message: format!("stdout: {e}"),
        })
}

/// Process entry point used by the `cfx` binary.
pub fn main() -> i32 {
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let stderr = std::io::stderr();
    let mut err = stderr.lock();
    run(std::env::args_os(), &mut input, &mut out, &mut err)
}
