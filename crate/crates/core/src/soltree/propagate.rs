use std::collections::BTreeMap;
use web_time::Instant;

use super::build::{intersect_into, own_over, union_common};
use super::{ranges_contain, AndId, Meta, Node, SolTree, VarRange};
use crate::infer::unify::{implies, ConstraintSet, Store, Var};

/// Does single `y` make single `x` redundant, in context `ctx`? True when
/// `y` is no more expensive and its constraints follow from those of `x`
/// (treating `y`'s own fresh variables as existential).
pub fn dominates(ctx: &ConstraintSet, y: &Meta, x: &Meta) -> bool {
    dominated(ctx, x, std::iter::once(y))
}

/// Cheap refutation: `y` fixes an outside rvar to a representation other
/// than the one `strong` already gives it.
fn clashes(strong: &ConstraintSet, y: &Meta) -> bool {
    y.cons.rassign.iter().any(|(r, i)| {
        !ranges_contain(&y.ranges, Var::R(*r)) && strong.assignment(strong.find(*r)).is_some_and(|j| j != *i)
    })
}

/// Is `x` dominated by any of `ys`? Merges `x` into `ctx` once.
fn dominated<'a>(ctx: &ConstraintSet, x: &Meta, ys: impl IntoIterator<Item = &'a Meta>) -> bool {
    let mut strong = None;
    for y in ys {
        if y.cost > x.cost {
            continue;
        }
        let s = strong.get_or_insert_with(|| ctx.merged(&x.cons));
        let Some(s) = s else {
            return true;
        };
        if clashes(s, y) {
            continue;
        }
        if implies(s, &y.cons, |v| ranges_contain(&y.ranges, v)) {
            return true;
        }
    }
    false
}

fn single_key(n: &Node) -> (f64, &[AndId]) {
    match n {
        Node::Single { choice, meta } => (meta.cost, choice.as_slice()),
        _ => (f64::INFINITY, &[]),
    }
}

/// Drop dominated singles among `kids`; other nodes are kept. At the root
/// only the cheapest single survives.
fn prune_singles(ctx: &ConstraintSet, kids: Vec<Node>, root: bool) -> (Vec<Node>, bool) {
    let (mut singles, others): (Vec<Node>, Vec<Node>) = kids.into_iter().partition(Node::is_single);
    if singles.len() < 2 {
        singles.extend(others);
        return (singles, false);
    }
    singles.sort_by(|a, b| {
        let (ca, xa) = single_key(a);
        let (cb, xb) = single_key(b);
        ca.total_cmp(&cb).then_with(|| xa.cmp(xb))
    });
    let before = singles.len();
    let kept: Vec<Node> = if root {
        singles.truncate(1);
        singles
    } else {
        let mut kept: Vec<Node> = Vec::new();
        for x in singles {
            if !dominated(ctx, x.meta(), kept.iter().map(Node::meta)) {
                kept.push(x);
            }
        }
        kept
    };
    let changed = kept.len() != before;
    let mut out = kept;
    out.extend(others);
    (out, changed)
}

pub struct Propagator {
    pub prune: bool,
    pub deadline: Option<Instant>,
    pub timed_out: bool,
    changed: bool,
    visits: u64,
}

impl Propagator {
    pub fn new(prune: bool, deadline: Option<Instant>) -> Propagator {
        Propagator {
            prune,
            deadline,
            timed_out: false,
            changed: false,
            visits: 0,
        }
    }

    fn check_time(&mut self) -> bool {
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    /// Run to a fixpoint. `None` means the tree has no solution.
    pub fn run(&mut self, root: Node) -> Option<Node> {
        let mut cur = root;
        loop {
            self.changed = false;
            let next = self.node(cur, &ConstraintSet::default(), true)?;
            if !self.changed || self.check_time() {
                return Some(next);
            }
            cur = next;
        }
    }

    fn node(&mut self, n: Node, ctx: &ConstraintSet, root: bool) -> Option<Node> {
        self.visits += 1;
        if self.timed_out || (self.visits % 64 == 0 && self.check_time()) {
            return Some(n);
        }
        match n {
            Node::Single { .. } => Some(n),
            Node::Or { op, children, meta } => self.or(op, children, meta, ctx, root),
            Node::And { ands, children, meta } => self.and(ands, children, meta, ctx),
        }
    }

    fn or(&mut self, op: String, children: Vec<Node>, meta: Meta, ctx: &ConstraintSet, root: bool) -> Option<Node> {
        let n_before = children.len();
        let mut kids = Vec::new();
        for c in children {
            match self.node(c, ctx, false) {
                None => self.changed = true,
                Some(Node::Or { children, .. }) => {
                    self.changed = true;
                    kids.extend(children);
                }
                Some(c) => kids.push(c),
            }
        }
        if self.prune {
            let (k, changed) = prune_singles(ctx, kids, root);
            kids = k;
            self.changed |= changed;
        }
        match kids.len() {
            0 => {
                self.changed |= n_before > 0;
                None
            }
            1 => {
                self.changed = true;
                kids.pop()
            }
            _ => {
                let over = union_common(kids.iter().map(|c| &c.meta().repr_over));
                let mut node = Node::Or {
                    op,
                    children: kids,
                    meta: Meta {
                        repr_over: over,
                        ..meta
                    },
                };
                node.meta_mut().cost = node.lower_bound();
                Some(node)
            }
        }
    }

    fn and(&mut self, mut ands: Vec<AndId>, children: Vec<Node>, meta: Meta, ctx: &ConstraintSet) -> Option<Node> {
        let Meta {
            mut cost,
            cons,
            mut ranges,
            ..
        } = meta;
        let mut full = ctx.merged(&cons)?;
        let mut pending: Vec<Node> = Vec::new();
        for c in children {
            pending.push(self.node(c, &full, false)?);
        }
        let mut ors: Vec<Node> = Vec::new();
        loop {
            let mut absorbed = false;
            for c in std::mem::take(&mut pending) {
                match c {
                    Node::Single { choice, meta } => {
                        full.merge(&meta.cons).ok()?;
                        ands.extend(choice);
                        cost += meta.cost;
                        ranges.extend(meta.ranges);
                        absorbed = true;
                    }
                    Node::And {
                        ands: a2,
                        children: c2,
                        meta: m2,
                    } => {
                        full.merge(&m2.cons).ok()?;
                        ands.extend(a2);
                        cost += m2.cost;
                        ranges.extend(m2.ranges);
                        pending.extend(c2);
                        absorbed = true;
                    }
                    or => ors.push(or),
                }
            }
            if absorbed {
                self.changed = true;
            }
            // Drop alternatives that contradict what is now known.
            for or in std::mem::take(&mut ors) {
                let Node::Or { op, children, meta } = or else { unreachable!() };
                let before = children.len();
                let kept: Vec<Node> = children
                    .into_iter()
                    .filter(|c| full.merged(&c.meta().cons).is_some())
                    .collect();
                if kept.len() != before {
                    self.changed = true;
                }
                match kept.len() {
                    0 => return None,
                    1 => pending.extend(kept),
                    _ => ors.push(Node::Or {
                        op,
                        children: kept,
                        meta,
                    }),
                }
            }
            if pending.is_empty() {
                break;
            }
        }
        ands.sort_unstable();
        ands.dedup();
        let delta = full.delta_from(ctx);
        let mut over = own_over(&delta, &full);
        for c in &ors {
            intersect_into(&mut over, &c.meta().repr_over);
        }
        if over.values().any(|s| *s == 0) {
            self.changed = true;
            return None;
        }
        let meta = Meta {
            cost,
            cons: delta,
            repr_over: over,
            ranges,
        };
        Some(if ors.is_empty() {
            Node::Single { choice: ands, meta }
        } else {
            Node::And {
                ands,
                children: ors,
                meta,
            }
        })
    }
}

/// Simplify and propagate constraints to a fixpoint; with `prune`, drop
/// redundant singles at every `Or`. An unsolvable tree becomes an empty `Or`.
pub fn propagate(t: &SolTree, prune: bool) -> SolTree {
    let mut p = Propagator::new(prune, None);
    t.with_root(p.run(t.root.clone()).unwrap_or_else(|| Node::empty_or("")))
}

/// Merge `And` nodes that are direct children of `And` nodes, replace
/// single-child `Or`s by their child and flatten nested `Or`s.
pub fn flatten(t: &SolTree) -> SolTree {
    fn go(n: Node) -> Node {
        match n {
            Node::Single { .. } => n,
            Node::Or { op, children, meta } => {
                let mut kids = Vec::new();
                for c in children.into_iter().map(go) {
                    match c {
                        Node::Or { children, .. } => kids.extend(children),
                        c => kids.push(c),
                    }
                }
                if kids.len() == 1 {
                    kids.pop().unwrap()
                } else {
                    Node::Or {
                        op,
                        children: kids,
                        meta,
                    }
                }
            }
            Node::And {
                mut ands,
                children,
                mut meta,
            } => {
                let mut kids = Vec::new();
                let mut stack: Vec<Node> = children.into_iter().map(go).collect();
                stack.reverse();
                while let Some(c) = stack.pop() {
                    match c {
                        Node::And {
                            ands: a2,
                            children: c2,
                            meta: m2,
                        } => {
                            ands.extend(a2);
                            meta.cost += m2.cost;
                            if meta.cons.merge(&m2.cons).is_err() {
                                // Siblings that must both be chosen disagree.
                                return Node::empty_or("");
                            }
                            meta.ranges.extend(m2.ranges);
                            intersect_into(&mut meta.repr_over, &m2.repr_over);
                            stack.extend(c2.into_iter().rev());
                        }
                        c => kids.push(c),
                    }
                }
                ands.sort_unstable();
                Node::And {
                    ands,
                    children: kids,
                    meta,
                }
            }
        }
    }
    t.with_root(go(t.root.clone()))
}

/// A partial combination while collapsing an `And`; `ranges` covers only
/// the singles picked so far.
struct Partial {
    cost: f64,
    full: ConstraintSet,
    choice: Vec<AndId>,
    ranges: Vec<VarRange>,
}

fn partial_meta(p: &Partial, base: &ConstraintSet) -> Meta {
    Meta {
        cost: p.cost,
        cons: p.full.delta_from(base),
        repr_over: BTreeMap::new(),
        ranges: p.ranges.clone(),
    }
}

fn prune_partials(parts: Vec<Partial>, base: &ConstraintSet, deadline: Option<Instant>) -> Result<Vec<Partial>, ()> {
    let mut parts = parts;
    parts.sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.choice.cmp(&b.choice)));
    let mut kept: Vec<(Partial, Meta)> = Vec::new();
    for (i, x) in parts.into_iter().enumerate() {
        if i % 64 == 63 && expired(deadline) {
            return Err(());
        }
        let mx = partial_meta(&x, base);
        if !dominated(base, &mx, kept.iter().map(|(_, m)| m)) {
            kept.push((x, mx));
        }
    }
    Ok(kept.into_iter().map(|(p, _)| p).collect())
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Replace every `And` whose children are all `Or`s of singles (or singles)
/// by an `Or` of the consistent combinations, bottom-up. With `prune`,
/// redundant partial combinations are dropped as they are formed.
pub fn collapse_leaves(t: &SolTree, prune: bool, deadline: Option<Instant>) -> Result<SolTree, ()> {
    let root = collapse(t.root.clone(), &ConstraintSet::default(), prune, deadline)?;
    Ok(t.with_root(root))
}

fn leaf_options(n: &Node) -> Option<Vec<&Node>> {
    match n {
        Node::Single { .. } => Some(vec![n]),
        Node::Or { children, .. } if children.iter().all(Node::is_single) => Some(children.iter().collect()),
        _ => None,
    }
}

fn collapse(n: Node, ctx: &ConstraintSet, prune: bool, deadline: Option<Instant>) -> Result<Node, ()> {
    if deadline.is_some_and(|d| Instant::now() >= d) {
        return Err(());
    }
    match n {
        Node::Single { .. } => Ok(n),
        Node::Or { op, children, meta } => {
            let mut kids = Vec::new();
            for c in children {
                match collapse(c, ctx, prune, deadline)? {
                    Node::Or { children, .. } => kids.extend(children),
                    c => kids.push(c),
                }
            }
            if prune {
                kids = prune_singles(ctx, kids, false).0;
            }
            Ok(Node::Or {
                op,
                children: kids,
                meta,
            })
        }
        Node::And { ands, children, meta } => {
            let Some(full) = ctx.merged(&meta.cons) else {
                return Ok(Node::empty_or(""));
            };
            let mut kids = Vec::new();
            for c in children {
                kids.push(collapse(c, &full, prune, deadline)?);
            }
            let options: Option<Vec<Vec<&Node>>> = kids.iter().map(leaf_options).collect();
            let Some(options) = options else {
                return Ok(Node::And {
                    ands,
                    children: kids,
                    meta,
                });
            };
            let mut parts = vec![Partial {
                cost: meta.cost,
                full: full.clone(),
                choice: ands.clone(),
                ranges: Vec::new(),
            }];
            for opts in options {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    return Err(());
                }
                let mut next = Vec::new();
                for (i, part) in parts.iter().enumerate() {
                    if i % 64 == 63 && expired(deadline) {
                        return Err(());
                    }
                    for o in &opts {
                        let m = o.meta();
                        let Some(merged) = part.full.merged(&m.cons) else {
                            continue;
                        };
                        let Node::Single { choice, .. } = o else { unreachable!() };
                        let mut ch = part.choice.clone();
                        ch.extend(choice);
                        let mut ranges = part.ranges.clone();
                        ranges.extend(m.ranges.iter().copied());
                        next.push(Partial {
                            cost: part.cost + m.cost,
                            full: merged,
                            choice: ch,
                            ranges,
                        });
                    }
                }
                parts = if prune { prune_partials(next, &full, deadline)? } else { next };
                if parts.is_empty() {
                    break;
                }
            }
            let singles: Vec<Node> = parts
                .into_iter()
                .map(|mut p| {
                    p.choice.sort_unstable();
                    let cons = p.full.delta_from(ctx);
                    let over = own_over(&cons, &p.full);
                    Node::Single {
                        choice: p.choice,
                        meta: Meta {
                            cost: p.cost,
                            cons,
                            repr_over: over,
                            ranges: meta.ranges.clone(),
                        },
                    }
                })
                .collect();
            Ok(Node::Or {
                op: String::new(),
                children: singles,
                meta: Meta::empty(),
            })
        }
    }
}
