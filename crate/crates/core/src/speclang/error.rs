use std::fmt;

use thiserror::Error;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameKind {
    Feature,
    Value,
    Class,
    Entity,
}

impl fmt::Display for NameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Feature => "feature",
            Self::Value => "value",
            Self::Class => "class",
            Self::Entity => "entity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{pos}: syntax error: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        pos: Pos,
        expected: Vec<String>,
        found: String,
    },

    #[error("{pos}: unknown {kind} `{name}`")]
    UnknownName {
        pos: Pos,
        kind: NameKind,
        name: String,
    },

    #[error("{pos}: {message}")]
    Invalid { pos: Pos, message: String },
}

impl SpecError {
    pub fn pos(&self) -> Pos {
        match self {
            Self::Syntax { pos, .. } | Self::UnknownName { pos, .. } | Self::Invalid { pos, .. } => {
                *pos
            }
        }
    }
}
