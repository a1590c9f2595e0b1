//! Representation selection for RepML programs.
//!
//! The pipeline is: [`lang::parse_program`] → [`lang::expand_aliases`] →
//! [`infer::infer_program`] → [`infer::collect_problem`] →
//! [`soltree::build_tree`] → a solver from [`solvers`] →
//! [`lower::apply_solution`]. [`pipeline`] strings these together.

pub mod bench;
pub mod gen;
pub mod infer;
pub mod lang;
pub mod lower;
pub mod pipeline;
pub mod problem;
pub mod soltree;
pub mod solvers;
