use thiserror::Error;

use crate::expr::EvalError;

/// Failures of classical and substitution statistics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("need at least {needed} samples, have {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("column `{column}` has no repeated value, so its mode is undefined")]
    UndefinedMode { column: String },
    /// `row` is the 0-based row index for pointwise evaluation, `None` for a
    /// single evaluation on substituted statistics.
    #[error("{}", match row {
        Some(r) => format!("expression is not finite at row {r}"),
        None => "expression is not finite on the substituted statistics".to_owned(),
    })]
    NonFiniteResult { row: Option<usize> },
}

impl From<EvalError> for StatError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::UnboundVariable(name) => StatError::UnboundVariable(name),
        }
    }
}
