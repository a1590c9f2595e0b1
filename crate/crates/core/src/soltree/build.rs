use std::collections::BTreeMap;

use thiserror::Error;

use super::{AndId, AndInfo, Meta, Node, ReprSet, SolTree, VarRange};
use crate::infer::unify::{ConstraintSet, Store};
use crate::lang::ast::{RVar, Type};
use crate::lang::cost::{eval_cost_expr, CostEnv};
use crate::lang::CostError;
use crate::problem::{cutoff_key, step_impl, OpUse, Problem, ValidationCtx, MAX_DEPTH};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("at most 64 representations are supported, found {0}")]
    TooManyReprs(usize),
}

struct Builder<'a> {
    p: &'a Problem,
    impl_cost: Vec<f64>,
    use_scale: Vec<Vec<f64>>,
    ands: Vec<AndInfo>,
    next_uvar: u32,
    next_rvar: u32,
}

/// Representations fixed by `delta` in the context `full`, per rvar.
pub(super) fn own_over(delta: &ConstraintSet, full: &ConstraintSet) -> BTreeMap<RVar, ReprSet> {
    let mut out = BTreeMap::new();
    let mut note = |r: RVar| {
        if let Some(i) = full.assignment(full.find(r)) {
            out.insert(r, 1u64 << i);
        }
    };
    for r in delta.rassign.keys() {
        note(*r);
    }
    for (a, b) in &delta.rparent {
        note(*a);
        note(*b);
    }
    out
}

/// Intersect `over` with `other` key-wise.
pub(super) fn intersect_into(over: &mut BTreeMap<RVar, ReprSet>, other: &BTreeMap<RVar, ReprSet>) {
    for (k, s) in other {
        over.entry(*k).and_modify(|x| *x &= s).or_insert(*s);
    }
}

/// Keys present in every map, with the union of their sets.
pub(super) fn union_common<'a>(maps: impl IntoIterator<Item = &'a BTreeMap<RVar, ReprSet>>) -> BTreeMap<RVar, ReprSet> {
    let mut iter = maps.into_iter();
    let Some(first) = iter.next() else {
        return BTreeMap::new();
    };
    let mut out = first.clone();
    for m in iter {
        out = out
            .into_iter()
            .filter_map(|(k, s)| m.get(&k).map(|t| (k, s | t)))
            .collect();
    }
    out
}

impl Builder<'_> {
    fn ctx(&self, store: &ConstraintSet) -> ValidationCtx {
        ValidationCtx {
            store: store.clone(),
            next_uvar: self.next_uvar,
            next_rvar: self.next_rvar,
        }
    }

    fn range_from(&self, lo: (u32, u32)) -> VarRange {
        VarRange {
            uvars: (lo.0, self.next_uvar),
            rvars: (lo.1, self.next_rvar),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn build_use(
        &mut self,
        u: &OpUse,
        scope: &[usize],
        mult: f64,
        parent: Option<AndId>,
        use_idx: usize,
        top: usize,
        store: &ConstraintSet,
        path: &mut Vec<(String, Type)>,
    ) -> Node {
        let key = cutoff_key(&self.ctx(store), u);
        if path.len() >= MAX_DEPTH || path.contains(&key) {
            return Node::empty_or(&u.op);
        }
        path.push(key);
        let lo = (self.next_uvar, self.next_rvar);
        let mut children = Vec::new();
        for id in self.p.candidates(scope, &u.op).collect::<Vec<_>>() {
            let lo_and = (self.next_uvar, self.next_rvar);
            let mut ctx = self.ctx(store);
            let Ok((_, uses)) = step_impl(self.p, id, &u.ty, &mut ctx) else {
                self.next_uvar = ctx.next_uvar;
                self.next_rvar = ctx.next_rvar;
                continue;
            };
            self.next_uvar = ctx.next_uvar;
            self.next_rvar = ctx.next_rvar;
            let and_id = self.ands.len();
            self.ands.push(AndInfo {
                impl_id: id,
                parent,
                use_idx,
                top,
            });
            let delta = ctx.store.delta_from(store);
            let mut over = own_over(&delta, &ctx.store);
            let mut kids = Vec::new();
            for (k, sub) in uses.iter().enumerate() {
                let m = mult * self.use_scale[id][k];
                let child = self.build_use(sub, scope, m, Some(and_id), k, top, &ctx.store, path);
                intersect_into(&mut over, &child.meta().repr_over);
                kids.push(child);
            }
            children.push(Node::And {
                ands: vec![and_id],
                children: kids,
                meta: Meta {
                    cost: self.impl_cost[id] * mult,
                    cons: delta,
                    repr_over: over,
                    ranges: vec![self.range_from(lo_and)],
                },
            });
        }
        path.pop();
        let over = union_common(children.iter().map(|c| &c.meta().repr_over));
        let mut node = Node::Or {
            op: u.op.clone(),
            children,
            meta: Meta {
                cost: 0.0,
                cons: ConstraintSet::default(),
                repr_over: over,
                ranges: vec![self.range_from(lo)],
            },
        };
        let lb = node.lower_bound();
        node.meta_mut().cost = if lb.is_finite() { lb } else { 0.0 };
        node
    }
}

/// Build the tree for all top-level uses of `p` with costs evaluated in `env`.
pub fn build_tree(p: &Problem, env: &CostEnv) -> Result<SolTree, BuildError> {
    if p.reprs.len() > 64 {
        return Err(BuildError::TooManyReprs(p.reprs.len()));
    }
    let impl_cost = p
        .impls
        .iter()
        .map(|d| eval_cost_expr(&d.cost, env))
        .collect::<Result<Vec<_>, _>>()?;
    let use_scale = p
        .impls
        .iter()
        .map(|d| d.uses.iter().map(|u| eval_cost_expr(&u.scale, env)).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    let mut b = Builder {
        p,
        impl_cost,
        use_scale,
        ands: Vec::new(),
        next_uvar: p.next_uvar,
        next_rvar: p.next_rvar,
    };
    let root_store = ConstraintSet::default();
    let mut children = Vec::new();
    let mut over = BTreeMap::new();
    for (j, u) in p.uses.iter().enumerate() {
        let scale = eval_cost_expr(&u.use_.scale, env)?;
        let child = b.build_use(&u.use_, &u.scope, scale, None, j, j, &root_store, &mut Vec::new());
        intersect_into(&mut over, &child.meta().repr_over);
        children.push(child);
    }
    let root = Node::And {
        ands: Vec::new(),
        children,
        meta: Meta {
            cost: 0.0,
            cons: ConstraintSet::default(),
            repr_over: over,
            ranges: vec![VarRange {
                uvars: (0, u32::MAX),
                rvars: (0, u32::MAX),
            }],
        },
    };
    Ok(SolTree {
        root,
        ands: b.ands,
        tops: (0..p.uses.len()).collect(),
        repr_names: p.reprs.iter().map(|r| r.name.clone()).collect(),
    })
}
