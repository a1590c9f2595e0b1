//! The RepML surface language: syntax tree, parser, printer, alias
//! expansion, cost evaluation and implementation-annotation desugaring.

pub mod alias;
pub mod ast;
pub mod cost;
pub mod desugar;
pub mod error;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use alias::expand_aliases;
pub use ast::*;
pub use cost::{eval_cost_expr, CostEnv};
pub use desugar::desugar_impl_annotation;
pub use error::{AliasError, CostError, ParseError};
pub use parser::{parse_program, parse_type};
pub use printer::{print_expr, print_program, print_type, TypePrinter};
