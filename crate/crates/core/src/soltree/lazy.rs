use std::cell::Cell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::rc::Rc;
use web_time::Instant;

use super::{AndId, Node, SolTree};
use crate::infer::unify::ConstraintSet;

/// One solution of a subtree; `cons` is relative to the subtree's context.
#[derive(Debug, Clone)]
pub struct Item {
    pub cost: f64,
    pub choice: Vec<AndId>,
    pub cons: ConstraintSet,
}

#[derive(Debug, Clone, PartialEq)]
struct Key<T: Ord>(f64, T);

impl<T: Ord> Eq for Key<T> {}

impl<T: Ord> PartialOrd for Key<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl<T: Ord> Ord for Key<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then_with(|| self.1.cmp(&o.1))
    }
}

struct Shared {
    deadline: Option<Instant>,
    timed_out: Cell<bool>,
    steps: Cell<u64>,
}

impl Shared {
    fn expired(&self) -> bool {
        self.steps.set(self.steps.get() + 1);
        if self.steps.get() % 256 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out.set(true);
                }
            }
        }
        self.timed_out.get()
    }
}

/// A stream plus everything it has produced so far.
struct Memo {
    stream: Stream,
    items: Vec<Rc<Item>>,
}

impl Memo {
    fn new(stream: Stream) -> Memo {
        Memo {
            stream,
            items: Vec::new(),
        }
    }

    fn get(&mut self, i: usize, sh: &Shared) -> Option<Rc<Item>> {
        while self.items.len() <= i {
            let it = self.stream.next(sh)?;
            self.items.push(Rc::new(it));
        }
        Some(self.items[i].clone())
    }
}

enum Stream {
    Once(Option<Item>),
    Or {
        kids: Vec<Memo>,
        heap: BinaryHeap<Reverse<Key<(usize, usize)>>>,
        started: bool,
    },
    And {
        cost: f64,
        choice: Vec<AndId>,
        full: ConstraintSet,
        ctx: ConstraintSet,
        kids: Vec<Memo>,
        heap: BinaryHeap<Reverse<Key<Vec<usize>>>>,
        visited: HashSet<Vec<usize>>,
        started: bool,
    },
}

impl Stream {
    fn build(n: &Node, ctx: &ConstraintSet) -> Stream {
        match n {
            Node::Single { choice, meta } => Stream::Once(ctx.merged(&meta.cons).map(|_| Item {
                cost: meta.cost,
                choice: choice.clone(),
                cons: meta.cons.clone(),
            })),
            Node::Or { children, .. } => Stream::Or {
                kids: children.iter().map(|c| Memo::new(Stream::build(c, ctx))).collect(),
                heap: BinaryHeap::new(),
                started: false,
            },
            Node::And { ands, children, meta } => {
                let Some(full) = ctx.merged(&meta.cons) else {
                    return Stream::Once(None);
                };
                Stream::And {
                    cost: meta.cost,
                    choice: ands.clone(),
                    kids: children.iter().map(|c| Memo::new(Stream::build(c, &full))).collect(),
                    full,
                    ctx: ctx.clone(),
                    heap: BinaryHeap::new(),
                    visited: HashSet::new(),
                    started: false,
                }
            }
        }
    }

    fn next(&mut self, sh: &Shared) -> Option<Item> {
        match self {
            Stream::Once(it) => it.take(),
            Stream::Or { kids, heap, started } => {
                if !*started {
                    *started = true;
                    for (k, m) in kids.iter_mut().enumerate() {
                        if let Some(it) = m.get(0, sh) {
                            heap.push(Reverse(Key(it.cost, (k, 0))));
                        }
                    }
                }
                let Reverse(Key(_, (k, i))) = heap.pop()?;
                let it = kids[k].get(i, sh)?;
                if let Some(nx) = kids[k].get(i + 1, sh) {
                    heap.push(Reverse(Key(nx.cost, (k, i + 1))));
                }
                Some((*it).clone())
            }
            Stream::And {
                cost,
                choice,
                full,
                ctx,
                kids,
                heap,
                visited,
                started,
            } => {
                if !*started {
                    *started = true;
                    let start = vec![0; kids.len()];
                    if let Some(c) = combo_cost(*cost, kids, &start, sh) {
                        visited.insert(start.clone());
                        heap.push(Reverse(Key(c, start)));
                    }
                }
                loop {
                    if sh.expired() {
                        return None;
                    }
                    let Reverse(Key(c, idx)) = heap.pop()?;
                    for j in 0..idx.len() {
                        let mut nx = idx.clone();
                        nx[j] += 1;
                        if visited.contains(&nx) {
                            continue;
                        }
                        if let Some(nc) = combo_cost(*cost, kids, &nx, sh) {
                            visited.insert(nx.clone());
                            heap.push(Reverse(Key(nc, nx)));
                        }
                    }
                    let mut merged = full.clone();
                    let mut ch = choice.clone();
                    let mut ok = true;
                    for (j, &i) in idx.iter().enumerate() {
                        let it = kids[j].get(i, sh).expect("index was produced before");
                        if merged.merge(&it.cons).is_err() {
                            ok = false;
                            break;
                        }
                        ch.extend(&it.choice);
                    }
                    if ok {
                        ch.sort_unstable();
                        return Some(Item {
                            cost: c,
                            choice: ch,
                            cons: merged.delta_from(ctx),
                        });
                    }
                }
            }
        }
    }
}

fn combo_cost(own: f64, kids: &mut [Memo], idx: &[usize], sh: &Shared) -> Option<f64> {
    let mut c = own;
    for (j, &i) in idx.iter().enumerate() {
        c += kids[j].get(i, sh)?.cost;
    }
    Some(c)
}

/// The valid solutions of a tree, cheapest first.
pub struct LazyStream {
    root: Memo,
    next: usize,
    sh: Shared,
}

impl LazyStream {
    pub fn timed_out(&self) -> bool {
        self.sh.timed_out.get()
    }

    /// Work done so far, in combination steps.
    pub fn steps(&self) -> u64 {
        self.sh.steps.get()
    }
}

impl Iterator for LazyStream {
    type Item = Item;

    fn next(&mut self) -> Option<Item> {
        let it = self.root.get(self.next, &self.sh)?;
        self.next += 1;
        Some((*it).clone())
    }
}

pub fn materialize_lazy(t: &SolTree, deadline: Option<Instant>) -> LazyStream {
    LazyStream {
        root: Memo::new(Stream::build(&t.root, &ConstraintSet::default())),
        next: 0,
        sh: Shared {
            deadline,
            timed_out: Cell::new(false),
            steps: Cell::new(0),
        },
    }
}
