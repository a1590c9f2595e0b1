use std::collections::BTreeMap;

use super::{Meta, Node, SolTree};
use crate::infer::unify::Var;

fn outer_vars(n: &Node, internal: &Meta, out: &mut Vec<Var>) {
    let (us, rs) = n.meta().cons.vars();
    for v in us.into_iter().map(Var::U).chain(rs.into_iter().map(Var::R)) {
        if !internal.internal(v) {
            out.push(v);
        }
    }
    for c in n.children() {
        outer_vars(c, internal, out);
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut i = i;
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Split the root's top-level uses into groups that share no variables
/// outside their own subtrees. Each group can be solved on its own.
pub fn partition(t: &SolTree) -> Vec<SolTree> {
    let Node::And { ands, children, meta } = &t.root else {
        return vec![t.clone()];
    };
    if !ands.is_empty() || children.len() != t.tops.len() || !meta.cons.is_empty() || children.len() < 2 {
        return vec![t.clone()];
    }
    let mut parent: Vec<usize> = (0..children.len()).collect();
    let mut owner: BTreeMap<Var, usize> = BTreeMap::new();
    for (i, c) in children.iter().enumerate() {
        let mut vs = Vec::new();
        outer_vars(c, c.meta(), &mut vs);
        for v in vs {
            match owner.get(&v) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    owner.insert(v, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..children.len() {
        let g = find(&mut parent, i);
        groups.entry(g).or_default().push(i);
    }
    groups
        .into_values()
        .map(|idx| {
            let kids: Vec<Node> = idx.iter().map(|&i| children[i].clone()).collect();
            let mut m = meta.clone();
            m.repr_over = BTreeMap::new();
            for k in &kids {
                super::build::intersect_into(&mut m.repr_over, &k.meta().repr_over);
            }
            SolTree {
                root: Node::And {
                    ands: Vec::new(),
                    children: kids,
                    meta: m,
                },
                ands: t.ands.clone(),
                tops: idx.iter().map(|&i| t.tops[i]).collect(),
                repr_names: t.repr_names.clone(),
            }
        })
        .collect()
}
