use std::fmt::Write;

use super::{AndId, Meta, Node, SolTree};
use crate::problem::Problem;

fn names(t: &SolTree, p: &Problem, ids: &[AndId]) -> String {
    ids.iter()
        .map(|a| {
            let id = t.ands[*a].impl_id;
            format!("{}#{}", p.impls[id].op, id)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_meta(t: &SolTree, m: &Meta) -> String {
    let mut s = format!("cost={}", m.cost);
    if !m.repr_over.is_empty() {
        let parts: Vec<String> = m
            .repr_over
            .iter()
            .map(|(r, set)| {
                let rs: Vec<&str> = (0..t.repr_names.len())
                    .filter(|i| set & (1u64 << i) != 0)
                    .map(|i| t.repr_names[i].as_str())
                    .collect();
                format!("r{}:{{{}}}", r.0, rs.join(","))
            })
            .collect();
        let _ = write!(s, " over=[{}]", parts.join(" "));
    }
    s
}

/// Indented text rendering: one node per line with its kind, the op or
/// implementations it stands for, its own cost and representation sets.
pub fn render_tree(t: &SolTree, p: &Problem) -> String {
    fn go(t: &SolTree, p: &Problem, n: &Node, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let line = match n {
            Node::And { ands, meta, .. } if ands.is_empty() => format!("And {}", fmt_meta(t, meta)),
            Node::And { ands, meta, .. } => format!("And {} {}", names(t, p, ands), fmt_meta(t, meta)),
            Node::Or { op, children, .. } if children.is_empty() => format!("Or {op} (empty)"),
            Node::Or { op, .. } if op.is_empty() => "Or".to_string(),
            Node::Or { op, .. } => format!("Or {op}"),
            Node::Single { choice, meta } => format!("Single {} {}", names(t, p, choice), fmt_meta(t, meta)),
        };
        let _ = writeln!(out, "{pad}{}", line.trim_end());
        for c in n.children() {
            go(t, p, c, depth + 1, out);
        }
    }
    let mut out = String::new();
    go(t, p, &t.root, 0, &mut out);
    out
}
