use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::infer::{collect_problem, infer_program};
use crate::lang::{expand_aliases, parse_program, CostEnv};
use crate::problem::enumerate_program;

const RUNNING: &str = include_str!("../../corpus/running_example.rml");

fn problem(src: &str) -> Problem {
    let prog = expand_aliases(&parse_program(src).unwrap()).unwrap();
    collect_problem(&infer_program(&prog).unwrap())
}

fn env() -> CostEnv {
    [("n".to_string(), 10000.0), ("W".to_string(), 63.0)].into_iter().collect()
}

fn singles(n: &Node) -> Vec<(f64, Vec<AndId>)> {
    match n {
        Node::Single { choice, meta } => vec![(meta.cost, choice.clone())],
        Node::Or { children, .. } => children.iter().flat_map(singles).collect(),
        Node::And { .. } => panic!("unexpected And"),
    }
}

fn exhaustive(t: &SolTree) -> SolTree {
    let t = propagate(t, false);
    let t = collapse_leaves(&t, false, None).unwrap();
    propagate(&t, false)
}

fn solutions(t: &SolTree, p: &Problem, n: &Node) -> BTreeSet<Vec<Solution>> {
    singles(n)
        .into_iter()
        .map(|(_, c)| t.reconstruct(p, &c).unwrap().into_values().collect())
        .collect()
}

#[test]
fn running_example_shape() {
    let p = problem(RUNNING);
    let t = build_tree(&p, &env()).unwrap();
    let Node::And { children, ands, .. } = &t.root else { panic!() };
    assert!(ands.is_empty());
    assert_eq!(children.len(), 1);
    let Node::Or { op, children: alts, .. } = &children[0] else { panic!() };
    assert_eq!(op, "contains");
    assert_eq!(alts.len(), 2);
    assert!(alts[0].children().is_empty());
    let Node::Or { op, children: folds, .. } = &alts[1].children()[0] else { panic!() };
    assert_eq!(op, "fold");
    assert_eq!(folds.len(), 2);
    assert_eq!(t.root.lower_bound(), 63.0);
    assert_eq!(t.root.fanout_product(), 4.0);
}

#[test]
fn exhaustive_matches_enumeration() {
    let p = problem(RUNNING);
    let t = exhaustive(&build_tree(&p, &env()).unwrap());
    let mut costs: Vec<f64> = singles(&t.root).iter().map(|s| s.0).collect();
    costs.sort_by(f64::total_cmp);
    assert_eq!(costs, vec![63.0, 20000.0, 20000.0]);
    let oracle: BTreeSet<Vec<Solution>> = enumerate_program(&p).into_iter().collect();
    assert_eq!(solutions(&t, &p, &t.root), oracle);
}

#[test]
fn pruning_drops_dominated_default() {
    let p = problem(RUNNING);
    let t = build_tree(&p, &env()).unwrap();
    let c = collapse_leaves(&propagate(&t, true), true, None).unwrap();
    let s = singles(&c.root);
    assert_eq!(s.len(), 2);
    let sols = solutions(&c, &p, &c.root);
    assert!(sols.contains(&vec![Solution::leaf(2)]));
    assert!(sols.contains(&vec![Solution {
        impl_id: 3,
        subs: vec![Solution::leaf(0)]
    }]));
    let best = propagate(&c, true);
    assert_eq!(singles(&best.root), vec![(63.0, singles(&best.root)[0].1.clone())]);
}

#[test]
fn lazy_stream_is_cheapest_first() {
    let p = problem(RUNNING);
    let t = build_tree(&p, &env()).unwrap();
    let items: Vec<Item> = materialize_lazy(&t, None).collect();
    let costs: Vec<f64> = items.iter().map(|i| i.cost).collect();
    assert_eq!(costs, vec![63.0, 20000.0, 20000.0]);
    let got: BTreeSet<Vec<Solution>> = items
        .iter()
        .map(|i| t.reconstruct(&p, &i.choice).unwrap().into_values().collect())
        .collect();
    assert_eq!(got, enumerate_program(&p).into_iter().collect());
}

#[test]
fn lazy_on_empty_or() {
    let p = problem(RUNNING);
    let t = build_tree(&p, &env()).unwrap().with_root(Node::empty_or("x"));
    assert_eq!(materialize_lazy(&t, None).count(), 0);
}

#[test]
fn guided_takes_cheapest_branch() {
    let p = problem(RUNNING);
    let t = build_tree(&p, &env()).unwrap();
    let it = materialize_guided(&t, &ConstraintSet::default(), None).unwrap().unwrap();
    assert_eq!(it.cost, 63.0);
    let sols: Vec<Solution> = t.reconstruct(&p, &it.choice).unwrap().into_values().collect();
    assert_eq!(sols, vec![Solution::leaf(2)]);
}

#[test]
fn homogeneous_assignments_by_picking() {
    let over: BTreeMap<RVar, ReprSet> = [(RVar(1), 0b11), (RVar(2), 0b01)].into_iter().collect();
    let all = homogeneous_assignments(&over, true);
    let want: Vec<BTreeMap<RVar, usize>> = vec![
        [(RVar(1), 0), (RVar(2), 0)].into_iter().collect(),
        [(RVar(1), 1), (RVar(2), 0)].into_iter().collect(),
    ];
    assert_eq!(all, want);
    assert_eq!(homogeneous_assignments(&over, false), want[..1].to_vec());
    let one: BTreeMap<RVar, ReprSet> = [(RVar(1), 0b01), (RVar(4), 0b01)].into_iter().collect();
    assert_eq!(homogeneous_assignments(&one, true).len(), 1);
}

#[test]
fn homogenize_running_example_prefers_list() {
    let p = problem(RUNNING);
    let t = build_tree(&p, &env()).unwrap();
    let vs = homogenize(&t, true);
    assert_eq!(vs.len(), 2);
    let first = exhaustive(&vs[0]);
    let s = singles(&first.root);
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].0, 20000.0);
    let second = exhaustive(&vs[1]);
    let mut costs: Vec<f64> = singles(&second.root).iter().map(|s| s.0).collect();
    costs.sort_by(f64::total_cmp);
    assert_eq!(costs, vec![63.0, 20000.0]);
}

#[test]
fn partition_splits_unrelated_uses() {
    let src = format!("{RUNNING}\nlet hasThree c2 = contains 3 c2\n");
    let p = problem(&src);
    let t = build_tree(&p, &env()).unwrap();
    let parts = partition(&t);
    assert_eq!(parts.len(), 2);
    assert_eq!(parts[0].tops, vec![0]);
    assert_eq!(parts[1].tops, vec![1]);

    let src = format!("{RUNNING}\nlet both c = contains 2 c && contains 3 c\n");
    let p = problem(&src);
    let t = build_tree(&p, &env()).unwrap();
    let parts = partition(&t);
    assert_eq!(parts.len(), 2);
    assert_eq!(parts[1].tops, vec![1, 2]);
}

#[test]
fn flatten_is_idempotent() {
    let p = problem(RUNNING);
    let t = flatten(&build_tree(&p, &env()).unwrap());
    assert_eq!(flatten(&t), t);
}

#[test]
fn render_running_example() {
    let p = problem(RUNNING);
    let t = build_tree(&p, &env()).unwrap();
    let r = render_tree(&t, &p);
    let lines: Vec<&str> = r.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[1].trim_start().starts_with("Or contains"));
    assert!(lines[2].trim_start().starts_with("And contains#2 cost=63"));
    assert!(lines[3].trim_start().starts_with("And contains#3 cost=10000"));
    assert_eq!(lines[0], "And cost=0 over=[r7:{list_r,iset_r}]");
    assert_eq!(lines[4], "      Or fold");
    assert!(lines[5].starts_with("        And fold#0 cost=10000"));
}
