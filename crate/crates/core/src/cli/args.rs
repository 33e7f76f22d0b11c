use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{Minimality, QueryMode, DEFAULT_BUDGET};
use crate::scores::{ScoreKind, DEFAULT_K};

use super::load::ClassifierRef;
use super::{CliError, TIMEOUT_ENV};

#[derive(Debug, Parser)]
#[command(name = "cfx", version, about = "Counterfactual explanations and responsibility scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List minimal counterfactual versions of the entity.
    Counterfactuals {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Attribution scores for every feature.
    Score {
        #[command(flatten)]
        common: CommonArgs,
        /// xresp, resp, shap or all; repeatable or comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        score: Vec<String>,
        /// Largest contingency size.
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Brave or cautious query over the minimal counterfactuals.
    Query {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "brave", value_parser = parse_mode)]
        mode: QueryMode,
        /// Formula, e.g. "changed(City) and label = accept".
        formula: String,
    },
    /// Compare two classifiers (first and second --classifier).
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Interactive queries: "brave? FORMULA", "cautious? FORMULA", "quit".
    Repl {
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Self::Counterfactuals { common }
            | Self::Score { common, .. }
            | Self::Query { common, .. }
            | Self::Compare { common, .. }
            | Self::Repl { common } => common,
        }
    }

    pub(crate) fn classifier_count(&self) -> usize {
        match self {
            Self::Compare { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Spec file declaring features, entities, constraints and marginals.
    pub spec: PathBuf,

    /// tree:PATH, nb:PATH, table:PATH, external:COMMAND or http:URL.
    #[arg(long = "classifier", required = true)]
    pub classifiers: Vec<ClassifierRef>,

    /// Class list for external classifiers, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<String>,

    /// Entity name; optional when the spec file declares exactly one.
    #[arg(long)]
    pub entity: Option<String>,

    #[arg(long, default_value = "card", value_parser = parse_minimality)]
    pub minimality: Minimality,

    #[arg(long)]
    pub max_changes: Option<usize>,

    /// Required class of the counterfactuals.
    #[arg(long)]
    pub target: Option<String>,

    /// Maximum candidates examined per search.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,

    /// Fail instead of reporting partial results when the budget runs out.
    #[arg(long)]
    pub strict: bool,

    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,

    /// uniform, marginals (from the spec file) or empirical:PATH.
    #[arg(long, default_value = "uniform")]
    pub dist: DistSource,

    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,

    /// Per-response timeout for external classifiers.
    #[arg(long, env = TIMEOUT_ENV)]
    pub timeout_ms: Option<u64>,

    /// Requests in flight for external subprocess classifiers.
    #[arg(long, default_value_t = crate::classifiers::external::DEFAULT_WINDOW)]
    pub window: usize,

    /// Disable the response cache of external classifiers.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistSource {
    Uniform,
    Marginals,
    Empirical(PathBuf),
}

impl FromStr for DistSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "marginals" => Ok(Self::Marginals),
            _ => match s.strip_prefix("empirical:") {
                Some(path) if !path.is_empty() => Ok(Self::Empirical(path.into())),
                _ => Err(format!("unknown distribution `{s}` (uniform|marginals|empirical:PATH)")),
            },
        }
    }
}

impl std::fmt::Display for DistSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::Marginals => f.write_str("marginals"),
            Self::Empirical(p) => write!(f, "empirical:{}", p.display()),
        }
    }
}

fn parse_minimality(s: &str) -> Result<Minimality, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<QueryMode, String> {
    s.parse()
}

pub(crate) fn score_kinds(names: &[String]) -> Result<Vec<ScoreKind>, CliError> {
    let mut kinds = Vec::new();
    for name in names {
        if name == "all" {
            kinds.extend(ScoreKind::ALL);
        } else {
            kinds.push(name.parse().map_err(CliError::Usage)?);
        }
    }
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}
