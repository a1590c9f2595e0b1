use web_time::Instant;

use super::lazy::Item;
use super::{Node, SolTree};
use crate::infer::unify::ConstraintSet;

struct Guide {
    deadline: Option<Instant>,
    steps: u64,
}

#[derive(Debug)]
pub struct Timeout;

impl Guide {
    fn tick(&mut self) -> Result<(), Timeout> {
        self.steps += 1;
        if self.steps % 256 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Timeout);
        }
        Ok(())
    }

    fn node(&mut self, n: &Node, ctx: &ConstraintSet) -> Result<Option<Item>, Timeout> {
        self.tick()?;
        match n {
            Node::Single { choice, meta } => Ok(ctx.merged(&meta.cons).map(|_| Item {
                cost: meta.cost,
                choice: choice.clone(),
                cons: meta.cons.clone(),
            })),
            Node::Or { children, .. } => {
                let mut order: Vec<(f64, usize)> =
                    children.iter().enumerate().map(|(i, c)| (c.lower_bound(), i)).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for (_, i) in order {
                    if let Some(it) = self.node(&children[i], ctx)? {
                        return Ok(Some(it));
                    }
                }
                Ok(None)
            }
            Node::And { ands, children, meta } => {
                let Some(full) = ctx.merged(&meta.cons) else {
                    return Ok(None);
                };
                let Some(items) = self.combine(children, &full)? else {
                    return Ok(None);
                };
                let mut acc = full;
                let mut cost = meta.cost;
                let mut choice = ands.clone();
                for it in &items {
                    acc.merge(&it.cons).expect("combined items are consistent");
                    cost += it.cost;
                    choice.extend(&it.choice);
                }
                choice.sort_unstable();
                Ok(Some(Item {
                    cost,
                    choice,
                    cons: acc.delta_from(ctx),
                }))
            }
        }
    }

    /// One mutually consistent item per child, or `None`.
    fn combine(&mut self, kids: &[Node], full: &ConstraintSet) -> Result<Option<Vec<Item>>, Timeout> {
        let mut items = Vec::new();
        for k in kids {
            match self.node(k, full)? {
                Some(it) => items.push(it),
                None => return Ok(None),
            }
        }
        // Children in the order they get to pick; a child that cannot be
        // repaired moves to the front on the next round.
        let mut order: Vec<usize> = (0..kids.len()).collect();
        for _round in 0..=kids.len() {
            let mut acc = full.clone();
            let mut bad = Vec::new();
            for &j in &order {
                if acc.merge(&items[j].cons).is_err() {
                    bad.push(j);
                }
            }
            if bad.is_empty() {
                return Ok(Some(items));
            }
            // Re-request the inconsistent children under the combined
            // constraint of the others.
            let mut failed = None;
            for &j in &bad {
                match self.node(&kids[j], &acc)? {
                    Some(it) => {
                        // `it.cons` is relative to `acc`; rebase it on `full`
                        // (this may keep some sibling constraints, which only
                        // over-constrains).
                        acc.merge(&it.cons).expect("item was built under acc");
                        items[j] = Item {
                            cons: acc.delta_from(full),
                            ..it
                        };
                    }
                    None => {
                        failed = Some(j);
                        break;
                    }
                }
            }
            let Some(j) = failed else {
                return Ok(Some(items));
            };
            order.retain(|x| *x != j);
            order.insert(0, j);
            items[j] = match self.node(&kids[j], full)? {
                Some(it) => it,
                None => return Ok(None),
            };
            // The others are re-requested lazily on the next round.
        }
        Ok(None)
    }
}

/// One solution of `t` consistent with `ctx`, found by taking the cheapest
/// looking option everywhere and repairing conflicts between siblings.
/// `Ok(None)` means the repair loop gave up.
pub fn materialize_guided(t: &SolTree, ctx: &ConstraintSet, deadline: Option<Instant>) -> Result<Option<Item>, Timeout> {
    let mut g = Guide { deadline, steps: 0 };
    g.node(&t.root, ctx)
}
