use std::fmt;
use std::str::FromStr;

use crate::model::CounterfactualModel;
use crate::speclang::{EvalContext, Formula};

use super::{EngineError, ModelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    /// Holds in some model.
    Brave,
    /// Holds in every model.
    Cautious,
}

impl FromStr for QueryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "brave" => Ok(Self::Brave),
            "cautious" => Ok(Self::Cautious),
            other => Err(format!("unknown query mode `{other}` (brave|cautious)")),
        }
    }
}

impl fmt::Display for QueryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Brave => "brave",
            Self::Cautious => "cautious",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryStatus {
    True,
    False,
    /// The model set is empty; cautious queries are not vacuously true.
    NoModels,
}

impl fmt::Display for QueryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::True => "true",
            Self::False => "false",
            Self::NoModels => "no-models",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAnswer {
    pub mode: QueryMode,
    pub status: QueryStatus,
    /// Brave: satisfying models. Cautious: counterexamples when false.
    pub witnesses: Vec<CounterfactualModel>,
}

pub fn answer_query(
    models: &ModelSet,
    q: &Formula,
    mode: QueryMode,
) -> Result<QueryAnswer, EngineError> {
    for class in q.label_classes() {
        if !models.classes.iter().any(|c| c == class) {
            return Err(EngineError::UnknownClass(class.to_owned()));
        }
    }
    if models.is_empty() {
        return Ok(QueryAnswer {
            mode,
            status: QueryStatus::NoModels,
            witnesses: vec![],
        });
    }
    let holds = |m: &CounterfactualModel| {
        q.eval(&EvalContext {
            original: &models.original,
            counterfactual: &m.result,
            label: &m.label,
        })
    };
    let (status, witnesses) = match mode {
        QueryMode::Brave => {
            let w: Vec<_> = models.models.iter().filter(|m| holds(m)).cloned().collect();
            let status = if w.is_empty() {
                QueryStatus::False
            } else {
                QueryStatus::True
            };
            (status, w)
        }
        QueryMode::Cautious => {
            let w: Vec<_> = models.models.iter().filter(|m| !holds(m)).cloned().collect();
            let status = if w.is_empty() {
                QueryStatus::True
            } else {
                QueryStatus::False
            };
            (status, w)
        }
    };
    Ok(QueryAnswer {
        mode,
        status,
        witnesses,
    })
}
