//! Brute-force enumeration of every valid solution, used as a test oracle.

use std::collections::BTreeMap;

use super::validate::step_impl;
use super::{OpUse, Problem, Solution, ValidationCtx};
use crate::infer::unify::zonk;
use crate::lang::ast::{RVar, Type, UVar};

/// Maximum nesting of implementations in a solution.
pub const MAX_DEPTH: usize = 32;

/// Rename uvars and rvars by first occurrence so that types equal up to
/// variable naming compare equal.
pub fn alpha_normalize(t: &Type) -> Type {
    let mut us: BTreeMap<UVar, UVar> = BTreeMap::new();
    let mut rs: BTreeMap<RVar, RVar> = BTreeMap::new();
    t.walk(&mut |t| match t {
        Type::Var(u) => {
            let n = us.len() as u32;
            us.entry(*u).or_insert(UVar(n));
        }
        Type::Repr(_, Some(r)) => {
            let n = rs.len() as u32;
            rs.entry(*r).or_insert(RVar(n));
        }
        _ => {}
    });
    t.map(&mut |t| match t {
        Type::Var(u) => Type::Var(us[&u]),
        Type::Repr(a, Some(r)) => Type::Repr(a, Some(rs[&r])),
        t => t,
    })
}

/// Key identifying a use for the recursion cutoff.
pub fn cutoff_key(ctx: &ValidationCtx, u: &OpUse) -> (String, Type) {
    (u.op.clone(), alpha_normalize(&zonk(&ctx.store, &u.ty)))
}

type Path = Vec<(String, Type)>;

// `ctx` accumulates every constraint so far; `anc` only those of the
// enclosing implementations, which is what the recursion cutoff looks at
// (matching the solution tree, where siblings are built independently).
fn for_use(
    p: &Problem,
    u: &OpUse,
    scope: &[usize],
    path: &mut Path,
    ctx: &ValidationCtx,
    anc: &ValidationCtx,
) -> Vec<(Solution, ValidationCtx)> {
    let key = cutoff_key(anc, u);
    if path.len() >= MAX_DEPTH || path.contains(&key) {
        return Vec::new();
    }
    path.push(key);
    let mut out = Vec::new();
    for id in p.candidates(scope, &u.op) {
        let mut c = ctx.clone();
        let Ok((_, uses)) = step_impl(p, id, &u.ty, &mut c) else {
            continue;
        };
        // Same fresh ids as in `c`, but only the ancestors' constraints.
        let mut a = anc.clone();
        a.next_uvar = ctx.next_uvar;
        a.next_rvar = ctx.next_rvar;
        if step_impl(p, id, &u.ty, &mut a).is_err() {
            continue;
        }
        let items: Vec<(&OpUse, &[usize])> = uses.iter().map(|x| (x, scope)).collect();
        for (subs, c2) in for_list(p, &items, path, c, &a) {
            out.push((Solution { impl_id: id, subs }, c2));
        }
    }
    path.pop();
    out
}

fn for_list(
    p: &Problem,
    items: &[(&OpUse, &[usize])],
    path: &mut Path,
    ctx: ValidationCtx,
    anc: &ValidationCtx,
) -> Vec<(Vec<Solution>, ValidationCtx)> {
    let Some(((u, scope), rest)) = items.split_first() else {
        return vec![(Vec::new(), ctx)];
    };
    let mut out = Vec::new();
    for (s, c) in for_use(p, u, scope, path, &ctx, anc) {
        for (mut tail, c2) in for_list(p, rest, path, c, anc) {
            tail.insert(0, s.clone());
            out.push((tail, c2));
        }
    }
    out
}

/// Every valid solution for a single use, in canonical order
/// (lexicographic by implementation index, then sub-solutions).
pub fn enumerate_use(p: &Problem, u: &OpUse, scope: &[usize]) -> Vec<Solution> {
    let c = ValidationCtx::new(p);
    for_use(p, u, scope, &mut Vec::new(), &c, &c)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

/// Every jointly valid assignment of solutions to all top-level uses.
pub fn enumerate_program(p: &Problem) -> Vec<Vec<Solution>> {
    let items: Vec<(&OpUse, &[usize])> = p.uses.iter().map(|u| (&u.use_, u.scope.as_slice())).collect();
    let c = ValidationCtx::new(p);
    for_list(p, &items, &mut Vec::new(), c.clone(), &c)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}
