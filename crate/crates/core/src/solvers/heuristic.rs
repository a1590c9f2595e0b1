use super::{simplify, solve_bottom_up, solve_greedy, Found, Search};
use crate::infer::unify::{ConstraintSet, Store};
use crate::soltree::{assignment_constraints, homogeneous_assignments, homogenize, materialize_guided, Node, SolTree};

/// Above this many combinations `mixed` stops using `bottom-up`.
pub const MIXED_THRESHOLD: f64 = 100000.0;

/// At every `And`, fix the still open rvars to the first maximally
/// homogeneous assignment of its representation sets.
fn homogenize_deep(n: Node, ctx: &ConstraintSet) -> Node {
    match n {
        Node::Single { .. } => n,
        Node::Or { op, children, meta } => Node::Or {
            op,
            children: children.into_iter().map(|c| homogenize_deep(c, ctx)).collect(),
            meta,
        },
        Node::And {
            ands,
            children,
            mut meta,
        } => {
            let Some(full) = ctx.merged(&meta.cons) else {
                return Node::And { ands, children, meta };
            };
            let open = meta
                .repr_over
                .iter()
                .filter(|(r, _)| full.assignment(full.find(**r)).is_none())
                .map(|(r, s)| (*r, *s))
                .collect();
            let pick = homogeneous_assignments(&open, false);
            let mut inner = full.clone();
            if let Some(a) = pick.first() {
                if let Some(cons) = assignment_constraints(a).and_then(|x| meta.cons.merged(&x)) {
                    if let Some(f) = ctx.merged(&cons) {
                        meta.cons = cons;
                        inner = f;
                    }
                }
            }
            Node::And {
                ands,
                children: children.into_iter().map(|c| homogenize_deep(c, &inner)).collect(),
                meta,
            }
        }
    }
}

/// Commit to one maximally homogeneous variant top to bottom, then take
/// the cheapest solution left, if any.
pub fn solve_homogeneous(t: &SolTree, s: &mut Search) -> Found {
    let Some(first) = homogenize(t, false).into_iter().next() else {
        return solve_greedy(t, s);
    };
    let deep = first.with_root(homogenize_deep(first.root.clone(), &ConstraintSet::default()));
    match simplify(&deep, s.deadline) {
        Err(()) => Found::Timeout,
        Ok(None) => Found::NoSolution,
        Ok(Some(t)) => solve_greedy(&t, s),
    }
}

/// Cheapest-looking choices everywhere, repairing sibling conflicts.
pub fn solve_guided(t: &SolTree, s: &mut Search) -> Found {
    match materialize_guided(t, &ConstraintSet::default(), s.deadline) {
        Err(_) => Found::Timeout,
        Ok(None) => Found::NoSolution,
        Ok(Some(it)) => Found::Items(vec![it]),
    }
}

/// `bottom-up` on small trees; otherwise the cheapest result of the
/// heuristics on the tree and on each of its homogeneous variants.
pub fn solve_mixed(t: &SolTree, s: &mut Search) -> Found {
    if t.root.fanout_product() <= MIXED_THRESHOLD {
        return solve_bottom_up(t, s);
    }
    let mut best: Option<crate::soltree::Item> = None;
    let mut timed_out = false;
    let mut trees = vec![t.clone()];
    trees.extend(homogenize(t, true));
    for v in &trees {
        for f in [solve_homogeneous(v, s), solve_guided(v, s)] {
            match f {
                Found::Items(items) => {
                    for it in items {
                        if best.as_ref().is_none_or(|b| it.cost < b.cost) {
                            best = Some(it);
                        }
                    }
                }
                Found::Timeout => timed_out = true,
                Found::NoSolution => {}
            }
        }
        if s.expired() {
            timed_out = true;
            break;
        }
    }
    match best {
        Some(b) => Found::Items(vec![b]),
        None if timed_out => Found::Timeout,
        None => Found::NoSolution,
    }
}
