use std::fmt;

use thiserror::Error;

/// A single broken model invariant: which entity, which rule.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl Violation {
    pub fn new(entity: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },

    #[error("model validation failed: {}", join(violations))]
    Validation { violations: Vec<Violation> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {what} has {got} entries, model expects {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown muscle `{0}`")]
    UnknownMuscle(String),

    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),

    #[error("unknown segment `{0}`")]
    UnknownSegment(String),

    #[error("unknown phase `{phase}` for case {case}")]
    UnknownPhase { case: String, phase: String },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error(
        "infeasible: muscles cannot balance coordinate `{coordinate}` (residual {residual:.6e})"
    )]
    Infeasible { coordinate: String, residual: f64 },

    #[error("no elements in group `{group}` on side {side}")]
    EmptyGroup { group: String, side: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("problem too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
