//! The representation-selection problem: op uses, implementations,
//! solutions, their cost and validation.

mod cost;
mod enumerate;
pub mod repr;
mod validate;

use std::collections::BTreeSet;

use crate::lang::ast::{CostExpr, RVar, ReprDecl, Type, UVar};

pub use cost::{solution_cost, total_cost};
pub use enumerate::{alpha_normalize, cutoff_key, enumerate_program, enumerate_use, MAX_DEPTH};
pub use repr::{apply_assignments, apply_representation, ReprError};
pub use validate::{
    instantiate_impl, step_impl, validate, validate_program, ProgramValidation, ReprAssignment, Trace, ValidateError,
    ValidationCtx,
};

#[derive(Debug, Clone, PartialEq)]
pub struct OpUse {
    pub scale: CostExpr,
    pub op: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplDef {
    pub cost: CostExpr,
    pub op: String,
    /// Closed type with `!r` nodes; rigid names are unique across impls.
    pub ty: Type,
    pub uses: Vec<OpUse>,
    /// Declaration index in the program, for scoping.
    pub decl: usize,
    /// Variables that occur nowhere outside this implementation.
    pub local_rvars: BTreeSet<RVar>,
    pub local_uvars: BTreeSet<UVar>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopLevelUse {
    pub use_: OpUse,
    /// Implementations visible at this use (and inside the solutions chosen for it).
    pub scope: Vec<usize>,
    pub decl: usize,
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub reprs: Vec<ReprDecl>,
    pub impls: Vec<ImplDef>,
    pub uses: Vec<TopLevelUse>,
    /// First uvar / rvar id not used by the problem.
    pub next_uvar: u32,
    pub next_rvar: u32,
}

/// A chosen implementation for an op use plus solutions for its own uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    pub impl_id: usize,
    pub subs: Vec<Solution>,
}

impl Solution {
    pub fn leaf(impl_id: usize) -> Solution {
        Solution {
            impl_id,
            subs: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.subs.iter().map(Solution::size).sum::<usize>()
    }
}

impl Problem {
    pub fn candidates<'a>(&'a self, scope: &'a [usize], op: &'a str) -> impl Iterator<Item = usize> + 'a {
        scope.iter().copied().filter(move |i| self.impls[*i].op == op)
    }

    pub fn repr_index(&self, name: &str) -> Option<usize> {
        self.reprs.iter().position(|r| r.name == name)
    }
}
