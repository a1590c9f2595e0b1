//! The and/or solution tree shared by the solvers.
//!
//! An `And` node stands for one implementation instance (or the whole
//! program at the root) and has one child per op use in its body; an `Or`
//! node holds the alternatives for one op use; a `Single` is a completed
//! sub-solution. Every node carries the constraints it adds relative to its
//! ancestors, so tree operations thread the ancestor context downwards.

mod build;
mod guided;
mod homogenize;
mod lazy;
mod partition;
mod propagate;
mod render;

use std::collections::BTreeMap;

use crate::infer::unify::{ConstraintSet, Var};
use crate::lang::ast::RVar;
use crate::problem::{Problem, Solution};

pub use build::{build_tree, BuildError};
pub use guided::{materialize_guided, Timeout};
pub use homogenize::{assignment_constraints, homogenize, homogeneous_assignments, restrict, MAX_VARIANTS};
pub use lazy::{materialize_lazy, Item, LazyStream};
pub use partition::partition;
pub use propagate::{collapse_leaves, dominates, flatten, propagate, Propagator};
pub use render::render_tree;

/// Bit `i` set means representation `i` (declaration order) is possible.
pub type ReprSet = u64;

pub type AndId = usize;

/// Half-open ranges of the fresh variables created inside a subtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarRange {
    pub uvars: (u32, u32),
    pub rvars: (u32, u32),
}

impl VarRange {
    pub fn contains(&self, v: Var) -> bool {
        match v {
            Var::U(u) => self.uvars.0 <= u.0 && u.0 < self.uvars.1,
            Var::R(r) => self.rvars.0 <= r.0 && r.0 < self.rvars.1,
        }
    }
}

pub fn ranges_contain(ranges: &[VarRange], v: Var) -> bool {
    ranges.iter().any(|r| r.contains(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    /// Cost contributed by this node itself (for `Or`: a lower bound).
    pub cost: f64,
    /// Constraints added relative to the ancestors.
    pub cons: ConstraintSet,
    /// Over-approximation of the representations each rvar may take.
    pub repr_over: BTreeMap<RVar, ReprSet>,
    /// Variables created inside this subtree.
    pub ranges: Vec<VarRange>,
}

impl Meta {
    pub fn empty() -> Meta {
        Meta {
            cost: 0.0,
            cons: ConstraintSet::default(),
            repr_over: BTreeMap::new(),
            ranges: Vec::new(),
        }
    }

    pub fn internal(&self, v: Var) -> bool {
        ranges_contain(&self.ranges, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// `ands` lists the implementation instances this node selects; empty
    /// for the root.
    And { ands: Vec<AndId>, children: Vec<Node>, meta: Meta },
    Or { op: String, children: Vec<Node>, meta: Meta },
    /// `choice` is sorted.
    Single { choice: Vec<AndId>, meta: Meta },
}

impl Node {
    pub fn meta(&self) -> &Meta {
        match self {
            Node::And { meta, .. } | Node::Or { meta, .. } | Node::Single { meta, .. } => meta,
        }
    }

    pub fn meta_mut(&mut self) -> &mut Meta {
        match self {
            Node::And { meta, .. } | Node::Or { meta, .. } | Node::Single { meta, .. } => meta,
        }
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::And { children, .. } | Node::Or { children, .. } => children,
            Node::Single { .. } => &[],
        }
    }

    pub fn is_single(&self) -> bool {
        matches!(self, Node::Single { .. })
    }

    pub fn empty_or(op: &str) -> Node {
        Node::Or {
            op: op.to_string(),
            children: Vec::new(),
            meta: Meta::empty(),
        }
    }

    /// Lower bound on the cost of any solution of this subtree.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Node::Single { meta, .. } => meta.cost,
            Node::And { children, meta, .. } => meta.cost + children.iter().map(Node::lower_bound).sum::<f64>(),
            Node::Or { children, .. } => children
                .iter()
                .map(Node::lower_bound)
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn count(&self) -> usize {
        1 + self.children().iter().map(Node::count).sum::<usize>()
    }

    /// Number of solutions if every combination were consistent.
    pub fn space(&self) -> f64 {
        match self {
            Node::Single { .. } => 1.0,
            Node::And { children, .. } => children.iter().map(Node::space).product(),
            Node::Or { children, .. } => children.iter().map(Node::space).sum(),
        }
    }

    /// Product of the `Or` fan-outs in the tree.
    pub fn fanout_product(&self) -> f64 {
        let own = match self {
            Node::Or { children, .. } if !children.is_empty() => children.len() as f64,
            _ => 1.0,
        };
        let p = self.children().iter().map(Node::fanout_product).product::<f64>() * own;
        if p.is_finite() {
            p
        } else {
            f64::INFINITY
        }
    }
}

/// Where an implementation instance sits in the solution forest.
#[derive(Debug, Clone, PartialEq)]
pub struct AndInfo {
    pub impl_id: usize,
    pub parent: Option<AndId>,
    /// Index of the op use within the parent implementation.
    pub use_idx: usize,
    /// Top-level use this instance belongs to.
    pub top: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolTree {
    pub root: Node,
    pub ands: Vec<AndInfo>,
    /// Top-level uses covered by this tree.
    pub tops: Vec<usize>,
    pub repr_names: Vec<String>,
}

impl SolTree {
    pub fn with_root(&self, root: Node) -> SolTree {
        SolTree {
            root,
            ands: self.ands.clone(),
            tops: self.tops.clone(),
            repr_names: self.repr_names.clone(),
        }
    }

    /// Rebuild one solution per covered top-level use from a choice set.
    pub fn reconstruct(&self, p: &Problem, choice: &[AndId]) -> Result<BTreeMap<usize, Solution>, String> {
        // (parent, slot) -> instance; the slot is the top-level use index at
        // the root and the use index inside the parent otherwise.
        let mut by_slot: BTreeMap<(Option<AndId>, usize), AndId> = BTreeMap::new();
        for &a in choice {
            let info = &self.ands[a];
            let slot = if info.parent.is_none() { info.top } else { info.use_idx };
            if let Some(prev) = by_slot.insert((info.parent, slot), a) {
                if prev != a {
                    return Err(format!("two implementations chosen for one op use ({prev}, {a})"));
                }
            }
        }
        fn go(
            tree: &SolTree,
            p: &Problem,
            a: AndId,
            by_slot: &BTreeMap<(Option<AndId>, usize), AndId>,
        ) -> Result<Solution, String> {
            let info = &tree.ands[a];
            let mut subs = Vec::new();
            for k in 0..p.impls[info.impl_id].uses.len() {
                let child = by_slot
                    .get(&(Some(a), k))
                    .ok_or_else(|| format!("no implementation chosen for use {k} of instance {a}"))?;
                subs.push(go(tree, p, *child, by_slot)?);
            }
            Ok(Solution {
                impl_id: info.impl_id,
                subs,
            })
        }
        let mut out = BTreeMap::new();
        for &t in &self.tops {
            let root = by_slot
                .get(&(None, t))
                .ok_or_else(|| format!("no implementation chosen for top-level use {t}"))?;
            out.insert(t, go(self, p, *root, &by_slot)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
