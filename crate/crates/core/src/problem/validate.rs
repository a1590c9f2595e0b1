//! Checking that a solution is valid for an op use.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{OpUse, Problem, Solution};
use crate::infer::unify::{unify, zonk, ConstraintSet, Store, UnifyError};
use crate::lang::ast::{RVar, Type, UVar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidateError {
    #[error("step 1: {0}")]
    WrongOp(String),
    #[error("step {step}: representation variable {rvar} given both `{first}` and `{second}`")]
    MultipleReprs {
        step: u8,
        rvar: u32,
        first: String,
        second: String,
    },
    #[error("step {step}: {msg}")]
    Unify { step: u8, msg: String },
    #[error("step 10: sub-solution {index} is invalid: {inner}")]
    InvalidSub { index: usize, inner: Box<ValidateError> },
}

impl ValidateError {
    /// The innermost error.
    pub fn root(&self) -> &ValidateError {
        match self {
            ValidateError::InvalidSub { inner, .. } => inner.root(),
            e => e,
        }
    }
}

/// Canonical rvar → representation name.
pub type ReprAssignment = BTreeMap<RVar, String>;

/// Private unification state for one validation run.
#[derive(Debug, Clone)]
pub struct ValidationCtx {
    pub store: ConstraintSet,
    pub next_uvar: u32,
    pub next_rvar: u32,
}

impl ValidationCtx {
    pub fn new(p: &Problem) -> ValidationCtx {
        ValidationCtx {
            store: ConstraintSet::default(),
            next_uvar: p.next_uvar,
            next_rvar: p.next_rvar,
        }
    }

    pub fn fresh_uvar(&mut self) -> UVar {
        self.next_uvar += 1;
        UVar(self.next_uvar - 1)
    }

    pub fn fresh_rvar(&mut self) -> RVar {
        self.next_rvar += 1;
        RVar(self.next_rvar - 1)
    }

    /// Assignment restricted to the program's rvars.
    pub fn assignment(&self, p: &Problem) -> ReprAssignment {
        (1..p.next_rvar)
            .filter_map(|r| {
                let root = self.store.find(RVar(r));
                self.store
                    .assignment(root)
                    .map(|i| (RVar(r), p.reprs[i].name.clone()))
            })
            .collect()
    }
}

/// The implementation and sub-solution types used by a validated solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub impl_id: usize,
    /// Instantiated implementation type with `!r` nodes.
    pub ty: Type,
    pub subs: Vec<Trace>,
}

fn conflict(p: &Problem, step: u8, e: UnifyError) -> ValidateError {
    match e {
        UnifyError::ReprConflict { rvar, first, second } => ValidateError::MultipleReprs {
            step,
            rvar,
            first: p.reprs[first].name.clone(),
            second: p.reprs[second].name.clone(),
        },
        e => ValidateError::Unify {
            step,
            msg: e.to_string(),
        },
    }
}

/// Steps 4–6: instantiate rigid names and freshen local variables.
pub fn instantiate_impl(p: &Problem, impl_id: usize, ctx: &mut ValidationCtx) -> (Type, Vec<OpUse>) {
    let def = &p.impls[impl_id];
    let mut rigid: HashMap<String, UVar> = HashMap::new();
    let mut rvars: HashMap<RVar, RVar> = HashMap::new();
    let mut uvars: HashMap<UVar, UVar> = HashMap::new();
    let mut inst = |t: &Type, ctx: &mut ValidationCtx| {
        t.map(&mut |t| match t {
            Type::Rigid(n) => Type::Var(*rigid.entry(n).or_insert_with(|| ctx.fresh_uvar())),
            Type::Repr(a, Some(r)) if def.local_rvars.contains(&r) => {
                Type::Repr(a, Some(*rvars.entry(r).or_insert_with(|| ctx.fresh_rvar())))
            }
            Type::Var(u) if def.local_uvars.contains(&u) => Type::Var(*uvars.entry(u).or_insert_with(|| ctx.fresh_uvar())),
            t => t,
        })
    };
    let ty = inst(&def.ty, ctx);
    let uses = def
        .uses
        .iter()
        .map(|u| OpUse {
            scale: u.scale.clone(),
            op: u.op.clone(),
            ty: inst(&u.ty, ctx),
        })
        .collect();
    (ty, uses)
}

/// Steps 4–9 for one implementation against `target`. On success the
/// context holds the new constraints; on failure it may be partially updated.
pub fn step_impl(
    p: &Problem,
    impl_id: usize,
    target: &Type,
    ctx: &mut ValidationCtx,
) -> Result<(Type, Vec<OpUse>), ValidateError> {
    let (ty, uses) = instantiate_impl(p, impl_id, ctx);
    // 7: record assignments.
    let mut assigns = Vec::new();
    ty.walk(&mut |t| {
        if let Type::Assign(r, inner) = t {
            assigns.push((r.clone(), (**inner).clone()));
        }
    });
    for (r, inner) in assigns {
        let idx = p.repr_index(&r).ok_or_else(|| ValidateError::Unify {
            step: 7,
            msg: format!("unknown representation `{r}`"),
        })?;
        match inner {
            Type::Repr(_, Some(rv)) => {
                let root = ctx.store.find(rv);
                ctx.store.assign(root, idx).map_err(|e| conflict(p, 7, e))?;
            }
            other => {
                return Err(ValidateError::Unify {
                    step: 7,
                    msg: format!("`!{r}` applied to non-repr type {}", crate::lang::print_type(&other)),
                })
            }
        }
    }
    // 8, 9: strip, fill underscores, unify.
    let stripped = ty.strip_assignments().map(&mut |t| match t {
        Type::Wildcard => Type::Var(ctx.fresh_uvar()),
        t => t,
    });
    unify(&mut ctx.store, &stripped, target).map_err(|e| conflict(p, 9, e))?;
    Ok((ty, uses))
}

fn op_check(p: &Problem, sol: &Solution, use_: &OpUse, scope: &[usize]) -> Result<(), ValidateError> {
    let def = p
        .impls
        .get(sol.impl_id)
        .ok_or_else(|| ValidateError::WrongOp(format!("no implementation {}", sol.impl_id)))?;
    if def.op != use_.op {
        return Err(ValidateError::WrongOp(format!(
            "implementation {} implements `{}`, the use needs `{}`",
            sol.impl_id, def.op, use_.op
        )));
    }
    if !scope.contains(&sol.impl_id) {
        return Err(ValidateError::WrongOp(format!(
            "implementation {} is not in scope",
            sol.impl_id
        )));
    }
    if sol.subs.len() != def.uses.len() {
        return Err(ValidateError::WrongOp(format!(
            "implementation {} has {} op uses but {} sub-solutions were given",
            sol.impl_id,
            def.uses.len(),
            sol.subs.len()
        )));
    }
    Ok(())
}

fn validate_in(
    p: &Problem,
    sol: &Solution,
    use_: &OpUse,
    scope: &[usize],
    ctx: &mut ValidationCtx,
) -> Result<Trace, ValidateError> {
    op_check(p, sol, use_, scope)?;
    let (ty, uses) = step_impl(p, sol.impl_id, &use_.ty, ctx)?;
    let mut subs = Vec::new();
    for (index, (s, u)) in sol.subs.iter().zip(&uses).enumerate() {
        let t = validate_in(p, s, u, scope, ctx).map_err(|e| ValidateError::InvalidSub {
            index,
            inner: Box::new(e),
        })?;
        subs.push(t);
    }
    Ok(Trace {
        impl_id: sol.impl_id,
        ty,
        subs,
    })
}

/// Validate `sol` against `use_` within `ctx`, extending it.
pub fn validate(
    p: &Problem,
    sol: &Solution,
    use_: &OpUse,
    scope: &[usize],
    ctx: &mut ValidationCtx,
) -> Result<Trace, ValidateError> {
    validate_in(p, sol, use_, scope, ctx)
}

pub struct ProgramValidation {
    pub assignment: ReprAssignment,
    pub traces: Vec<Trace>,
    pub ctx: ValidationCtx,
}

impl ProgramValidation {
    /// A trace type with the final substitution applied.
    pub fn resolve(&self, t: &Type) -> Type {
        zonk(&self.ctx.store, t)
    }
}

/// Validate one solution per top-level use, jointly. On failure reports the
/// index of the offending use.
pub fn validate_program(p: &Problem, sols: &[Solution]) -> Result<ProgramValidation, (usize, ValidateError)> {
    if sols.len() != p.uses.len() {
        return Err((
            sols.len().min(p.uses.len()),
            ValidateError::WrongOp(format!("{} solutions for {} op uses", sols.len(), p.uses.len())),
        ));
    }
    let mut ctx = ValidationCtx::new(p);
    let mut traces = Vec::new();
    for (j, (s, u)) in sols.iter().zip(&p.uses).enumerate() {
        traces.push(validate_in(p, s, &u.use_, &u.scope, &mut ctx).map_err(|e| (j, e))?);
    }
    Ok(ProgramValidation {
        assignment: ctx.assignment(p),
        traces,
        ctx,
    })
}
