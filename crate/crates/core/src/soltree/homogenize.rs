use std::collections::{BTreeMap, BTreeSet};

use super::{Meta, Node, ReprSet, SolTree};
use crate::infer::unify::{ConstraintSet, Store};
use crate::lang::ast::RVar;

/// Upper bound on the number of assignments produced.
pub const MAX_VARIANTS: usize = 64;

/// Maximally homogeneous assignments for `over`: repeatedly pick a
/// representation and give it to every remaining rvar that admits it.
/// Distinct picking orders are explored depth-first in declaration order,
/// so the first result always picks the lowest representation available.
pub fn homogeneous_assignments(over: &BTreeMap<RVar, ReprSet>, all: bool) -> Vec<BTreeMap<RVar, usize>> {
    let vars: Vec<(RVar, ReprSet)> = over.iter().filter(|(_, s)| **s != 0).map(|(r, s)| (*r, *s)).collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let limit = if all { MAX_VARIANTS } else { 1 };
    let mut cur = BTreeMap::new();
    pick(&vars, &mut cur, &mut out, &mut seen, limit);
    out
}

fn pick(
    vars: &[(RVar, ReprSet)],
    cur: &mut BTreeMap<RVar, usize>,
    out: &mut Vec<BTreeMap<RVar, usize>>,
    seen: &mut BTreeSet<Vec<(RVar, usize)>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    let open: Vec<(RVar, ReprSet)> = vars.iter().filter(|(r, _)| !cur.contains_key(r)).copied().collect();
    if open.is_empty() {
        if seen.insert(cur.iter().map(|(r, i)| (*r, *i)).collect()) {
            out.push(cur.clone());
        }
        return;
    }
    let avail = open.iter().fold(0u64, |a, (_, s)| a | s);
    for i in 0..64 {
        if avail & (1u64 << i) == 0 {
            continue;
        }
        let fits: Vec<RVar> = open.iter().filter(|(_, s)| s & (1u64 << i) != 0).map(|(r, _)| *r).collect();
        for r in &fits {
            cur.insert(*r, i);
        }
        pick(vars, cur, out, seen, limit);
        for r in &fits {
            cur.remove(r);
        }
        if out.len() >= limit {
            return;
        }
    }
}

/// Constraint set fixing each rvar in `a`; `None` if `a` conflicts with itself.
pub fn assignment_constraints(a: &BTreeMap<RVar, usize>) -> Option<ConstraintSet> {
    let mut cs = ConstraintSet::default();
    for (r, i) in a {
        let root = cs.find(*r);
        cs.assign(root, *i).ok()?;
    }
    Some(cs)
}

/// `t` with the representations in `a` imposed at the root.
pub fn restrict(t: &SolTree, a: &BTreeMap<RVar, usize>) -> SolTree {
    let Some(extra) = assignment_constraints(a) else {
        return t.with_root(Node::empty_or(""));
    };
    let root = match t.root.clone() {
        Node::And {
            ands,
            children,
            mut meta,
        } => match meta.cons.merged(&extra) {
            Some(c) => {
                meta.cons = c;
                Node::And { ands, children, meta }
            }
            None => Node::empty_or(""),
        },
        other => Node::And {
            ands: Vec::new(),
            children: vec![other],
            meta: Meta {
                cons: extra,
                ..Meta::empty()
            },
        },
    };
    t.with_root(root)
}

/// One restricted copy of `t` per maximally homogeneous assignment of the
/// root's rvars; only the first unless `all_variants`.
pub fn homogenize(t: &SolTree, all_variants: bool) -> Vec<SolTree> {
    homogeneous_assignments(&t.root.meta().repr_over, all_variants)
        .iter()
        .map(|a| restrict(t, a))
        .collect()
}
