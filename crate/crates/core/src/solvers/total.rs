use web_time::Instant;

use super::{Found, Search};
use crate::soltree::{collapse_leaves, materialize_lazy, Item, Node, Propagator, SolTree};

fn root_items(n: &Node) -> Option<Vec<Item>> {
    let single = |n: &Node| match n {
        Node::Single { choice, meta } => Some(Item {
            cost: meta.cost,
            choice: choice.clone(),
            cons: meta.cons.clone(),
        }),
        _ => None,
    };
    match n {
        Node::Single { .. } => single(n).map(|i| vec![i]),
        Node::Or { children, .. } => children.iter().map(single).collect(),
        Node::And { .. } => None,
    }
}

/// Alternate propagation and leaf collapsing until the root is an `Or` of
/// singles.
fn collapse_all(t: &SolTree, prune: bool, deadline: Option<Instant>) -> Found {
    let mut cur = t.clone();
    loop {
        let mut pr = Propagator::new(prune, deadline);
        let Some(root) = pr.run(cur.root.clone()) else {
            return Found::NoSolution;
        };
        if pr.timed_out {
            return Found::Timeout;
        }
        if let Some(items) = root_items(&root) {
            return Found::from_items(items);
        }
        // After propagation the deepest `And` has only `Or`s of singles
        // below it, so every collapse makes progress.
        match collapse_leaves(&cur.with_root(root), prune, deadline) {
            Err(()) => return Found::Timeout,
            Ok(next) => cur = next,
        }
    }
}

/// All valid solutions, cheapest first.
pub fn solve_exhaustive(t: &SolTree, s: &mut Search) -> Found {
    match collapse_all(t, false, s.deadline) {
        Found::Items(mut items) => {
            s.stats.nodes_visited += items.len() as u64;
            items.sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.choice.cmp(&b.choice)));
            Found::Items(items)
        }
        f => f,
    }
}

/// The optimum, with redundant singles pruned at every `Or`.
pub fn solve_bottom_up(t: &SolTree, s: &mut Search) -> Found {
    match collapse_all(t, true, s.deadline) {
        Found::Items(mut items) => {
            items.sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.choice.cmp(&b.choice)));
            items.truncate(1);
            Found::Items(items)
        }
        f => f,
    }
}

/// The head of the cheapest-first stream.
pub fn solve_greedy(t: &SolTree, s: &mut Search) -> Found {
    let mut stream = materialize_lazy(t, s.deadline);
    let first = stream.next();
    s.stats.nodes_visited += stream.steps();
    if stream.timed_out() {
        return Found::Timeout;
    }
    match first {
        Some(it) => Found::Items(vec![it]),
        None => Found::NoSolution,
    }
}
