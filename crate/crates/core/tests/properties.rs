use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use reprsel::gen::{gen_program, GenSpec, InitKind};
use reprsel::lang::ast::RVar;
use reprsel::lang::CostEnv;
use reprsel::pipeline::{analyze, Analyzed};
use reprsel::problem::{total_cost, validate_program, Problem, Solution};
use reprsel::soltree::{
    build_tree, collapse_leaves, flatten, homogeneous_assignments, materialize_lazy, partition, propagate, Node,
    ReprSet, SolTree,
};
use reprsel::solvers::{solve, Outcome, SolveOptions, SolverKind};

const RUNNING: &str = include_str!("../corpus/running_example.rml");

fn env() -> CostEnv {
    [("n".to_string(), 1000.0), ("W".to_string(), 40.0)].into_iter().collect()
}

fn generated(size: usize, init: usize, seed: u64) -> Analyzed {
    analyze(&gen_program(&GenSpec {
        size,
        init: InitKind::ALL[init],
        seed,
    }))
    .unwrap()
}

fn solutions(kind: SolverKind, p: &Problem) -> Vec<(Vec<Solution>, f64)> {
    match solve(p, &env(), &SolveOptions::new(kind)).unwrap().outcome {
        Outcome::Solutions(s) => s.into_iter().map(|s| (s.sols, s.cost)).collect(),
        o => panic!("{kind}: {o:?}"),
    }
}

/// Every solution of a tree by collapsing it without pruning.
fn tree_solutions(t: &SolTree, p: &Problem) -> BTreeSet<Vec<Solution>> {
    fn singles(n: &Node) -> Vec<Vec<usize>> {
        match n {
            Node::Single { choice, .. } => vec![choice.clone()],
            Node::Or { children, .. } => children.iter().flat_map(singles).collect(),
            Node::And { .. } => panic!("not collapsed"),
        }
    }
    let mut cur = t.clone();
    loop {
        cur = propagate(&cur, false);
        if !matches!(cur.root, Node::And { .. }) {
            break;
        }
        cur = collapse_leaves(&cur, false, None).unwrap();
    }
    singles(&cur.root)
        .iter()
        .map(|c| cur.reconstruct(p, c).unwrap().into_values().collect())
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// All results of the picking procedure, over every picking order.
fn constructive(over: &BTreeMap<RVar, ReprSet>, reprs: usize) -> (BTreeSet<Vec<(RVar, usize)>>, Vec<(RVar, usize)>) {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }
    let run = |order: &[usize]| {
        let mut a = BTreeMap::new();
        for &i in order {
            for (r, s) in over {
                if !a.contains_key(r) && s & (1 << i) != 0 {
                    a.insert(*r, i);
                }
            }
        }
        a.into_iter().collect::<Vec<_>>()
    };
    let all = perms(reprs).iter().map(|o| run(o)).collect();
    (all, run(&(0..reprs).collect::<Vec<_>>()))
}

fn sharing_program(kinds: &[u8]) -> String {
    let mut src = RUNNING.to_string();
    for (i, k) in kinds.iter().enumerate() {
        src.push_str(&match k {
            0 => format!("let f{i} c = contains {i} c\n"),
            1 => format!("let f{i} c = contains {i} c && contains 1 c\n"),
            _ => format!("let f{i} c d = contains {i} c && contains 1 d\n"),
        });
    }
    src
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn lazy_stream_is_ordered_and_complete(size in 0usize..5, init in 0usize..3, seed in 0u64..10_000) {
        let a = generated(size, init, seed);
        let p = &a.problem;
        let t = build_tree(p, &env()).unwrap();
        let items: Vec<_> = materialize_lazy(&t, None).collect();
        for w in items.windows(2) {
            prop_assert!(w[0].cost <= w[1].cost);
        }
        let got: Vec<Vec<Solution>> = items
            .iter()
            .map(|i| t.reconstruct(p, &i.choice).unwrap().into_values().collect())
            .collect();
        let set: BTreeSet<_> = got.iter().cloned().collect();
        prop_assert_eq!(set.len(), got.len());
        prop_assert_eq!(set, tree_solutions(&t, p));
    }

    #[test]
    fn total_solvers_agree(size in 0usize..6, init in 0usize..3, seed in 0u64..10_000) {
        let a = generated(size, init, seed);
        let p = &a.problem;
        let all = solutions(SolverKind::Exhaustive, p);
        let opt = all.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
        for (s, c) in &all {
            prop_assert!(validate_program(p, s).is_ok());
            prop_assert!(close(total_cost(p, s, &env()).unwrap(), *c));
        }
        for k in [SolverKind::BottomUp, SolverKind::Greedy] {
            let (s, c) = solutions(k, p).remove(0);
            prop_assert!(close(c, opt), "{} {} vs {}", k, c, opt);
            prop_assert!(validate_program(p, &s).is_ok());
        }
        for k in [SolverKind::Homogeneous, SolverKind::Guided, SolverKind::Mixed] {
            if let Outcome::Solutions(s) = solve(p, &env(), &SolveOptions::new(k)).unwrap().outcome {
                prop_assert!(validate_program(p, &s[0].sols).is_ok());
                prop_assert!(s[0].cost >= opt - 1e-9 * opt.max(1.0));
            }
        }
    }

    #[test]
    fn simplification_preserves_solutions(size in 0usize..5, init in 0usize..3, seed in 0u64..10_000) {
        let a = generated(size, init, seed);
        let p = &a.problem;
        let t = build_tree(p, &env()).unwrap();
        let base = tree_solutions(&t, p);
        prop_assert_eq!(&tree_solutions(&flatten(&t), p), &base);
        prop_assert_eq!(&tree_solutions(&propagate(&t, false), p), &base);
    }

    #[test]
    fn root_repr_over_covers_valid_solutions(size in 0usize..5, init in 0usize..3, seed in 0u64..10_000) {
        let a = generated(size, init, seed);
        let p = &a.problem;
        let t = build_tree(p, &env()).unwrap();
        let over = &t.root.meta().repr_over;
        for s in tree_solutions(&t, p) {
            let v = validate_program(p, &s).unwrap();
            for (r, name) in &v.assignment {
                if let Some(set) = over.get(r) {
                    let i = p.repr_index(name).unwrap();
                    prop_assert!(set & (1 << i) != 0, "{:?} -> {} outside {:b}", r, name, set);
                }
            }
        }
    }

    #[test]
    fn scaling_impl_costs_scales_the_optimum(size in 0usize..5, init in 0usize..3, seed in 0u64..10_000, k in 0.1f64..20.0) {
        let a = generated(size, init, seed);
        let mut q = a.problem.clone();
        for d in &mut q.impls {
            d.cost = d.cost.scaled(k);
        }
        for kind in [SolverKind::BottomUp, SolverKind::Greedy] {
            let (_, c0) = solutions(kind, &a.problem).remove(0);
            let (_, c1) = solutions(kind, &q).remove(0);
            prop_assert!(close(c1, k * c0), "{} {} vs {}", kind, c1, k * c0);
        }
    }

    #[test]
    fn partition_is_sound(kinds in proptest::collection::vec(0u8..3, 1..5)) {
        let a = analyze(&sharing_program(&kinds)).unwrap();
        let p = &a.problem;
        let t = build_tree(p, &env()).unwrap();
        let parts = partition(&t);
        let expected: usize = 1 + kinds.iter().map(|k| if *k == 2 { 2 } else { 1 }).sum::<usize>();
        prop_assert_eq!(parts.len(), expected);
        let mut tops: Vec<usize> = parts.iter().flat_map(|c| c.tops.clone()).collect();
        tops.sort_unstable();
        prop_assert_eq!(tops, (0..p.uses.len()).collect::<Vec<_>>());
        // Component optima add up to the joint optimum.
        let joint = tree_solutions(&t, p)
            .iter()
            .map(|s| total_cost(p, s, &env()).unwrap())
            .fold(f64::INFINITY, f64::min);
        let (_, c) = solutions(SolverKind::BottomUp, p).remove(0);
        prop_assert!(close(c, joint));
    }

    #[test]
    fn homogeneous_assignments_are_constructive(sets in proptest::collection::vec(1u64..16, 1..5)) {
        let over: BTreeMap<RVar, ReprSet> = sets.iter().enumerate().map(|(i, s)| (RVar(i as u32 + 1), *s)).collect();
        let (valid, first) = constructive(&over, 4);
        let got: BTreeSet<Vec<(RVar, usize)>> = homogeneous_assignments(&over, true)
            .into_iter()
            .map(|a| a.into_iter().collect())
            .collect();
        prop_assert_eq!(&got, &valid);
        let one = homogeneous_assignments(&over, false);
        prop_assert_eq!(one.len(), 1);
        prop_assert_eq!(one[0].clone().into_iter().collect::<Vec<_>>(), first);
    }
}
