use super::ast::Pos;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError {
            pos,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AliasError {
    #[error("cyclic type alias involving `{0}`")]
    Cycle(String),
    #[error("type `{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("unbound cost variable {0}")]
    Unbound(String),
    #[error("division by zero in cost expression")]
    DivByZero,
    #[error("cost expression evaluated to a non-finite value")]
    NonFinite,
}
