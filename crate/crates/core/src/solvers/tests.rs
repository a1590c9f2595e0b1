use std::collections::BTreeSet;
use std::path::Path;

use super::*;
use crate::infer::{collect_problem, infer_program};
use crate::lang::{expand_aliases, parse_program};
use crate::problem::enumerate_program;

const RUNNING: &str = include_str!("../../corpus/running_example.rml");

const SHARED: &str = r#"
type IntSet.t
external List.length : 'a list -> int
external List.hd : 'a list -> 'a
external IntSet.cardinal : IntSet.t -> int
external IntSet.min_elt : IntSet.t -> int
letrepr list_r {'a = 'a list}
letrepr iset_r {int = IntSet.t}
letop size : 'a repr -> int
letimpl[1] size : !list_r (_ repr) -> _ = List.length
letop first : 'a repr -> 'a
letimpl[1] first : !iset_r (_ repr) -> _ = IntSet.min_elt
letimpl[10] first : !list_r (_ repr) -> _ = List.hd
let f c = size c + first c
"#;

fn problem(src: &str) -> Problem {
    let prog = expand_aliases(&parse_program(src).unwrap()).unwrap();
    collect_problem(&infer_program(&prog).unwrap())
}

fn env() -> CostEnv {
    [("n".to_string(), 10000.0), ("W".to_string(), 63.0)].into_iter().collect()
}

fn run(p: &Problem, kind: SolverKind) -> SolverResult {
    let mut o = SolveOptions::new(kind);
    o.smt_path = "/usr/local/bin/z3".into();
    solve(p, &env(), &o).unwrap()
}

fn have_z3() -> bool {
    Path::new("/usr/local/bin/z3").exists()
}

fn costs(r: &SolverResult) -> Vec<f64> {
    match &r.outcome {
        Outcome::Solutions(s) => s.iter().map(|x| x.cost).collect(),
        o => panic!("expected solutions, got {o:?}"),
    }
}

#[test]
fn running_example_all_solvers() {
    let p = problem(RUNNING);
    let ex = run(&p, SolverKind::Exhaustive);
    assert_eq!(costs(&ex), vec![63.0, 20000.0, 20000.0]);
    let got: BTreeSet<Vec<Solution>> = match &ex.outcome {
        Outcome::Solutions(s) => s.iter().map(|x| x.sols.clone()).collect(),
        _ => unreachable!(),
    };
    assert_eq!(got, enumerate_program(&p).into_iter().collect());
    for k in [SolverKind::BottomUp, SolverKind::Greedy, SolverKind::Guided, SolverKind::Mixed, SolverKind::Transfer] {
        let r = run(&p, k);
        assert_eq!(costs(&r), vec![63.0], "{k}");
        assert_eq!(r.best().unwrap().sols, vec![Solution::leaf(2)], "{k}");
    }
    if have_z3() {
        assert_eq!(costs(&run(&p, SolverKind::Smt)), vec![63.0]);
    }
    let h = run(&p, SolverKind::Homogeneous);
    assert_eq!(costs(&h), vec![20000.0]);
    assert_eq!(
        h.best().unwrap().sols,
        vec![Solution {
            impl_id: 3,
            subs: vec![Solution::leaf(0)]
        }]
    );
}

#[test]
fn string_elements_rule_out_iset() {
    let src = RUNNING.replace("contains 2 coll", "contains \"two\" coll");
    let p = problem(&src);
    for k in SolverKind::ALL {
        if k == SolverKind::Smt && !have_z3() {
            continue;
        }
        let r = run(&p, k);
        assert_eq!(costs(&r)[0], 20000.0, "{k}");
        assert_eq!(
            r.best().unwrap().sols,
            vec![Solution {
                impl_id: 3,
                subs: vec![Solution::leaf(0)]
            }]
        );
    }
}

#[test]
fn guided_repairs_conflict() {
    let p = problem(SHARED);
    let ex = run(&p, SolverKind::Exhaustive);
    assert_eq!(costs(&ex), vec![11.0]);
    let g = run(&p, SolverKind::Guided);
    assert_eq!(costs(&g), vec![11.0]);
    assert_eq!(g.best().unwrap().sols, vec![Solution::leaf(0), Solution::leaf(2)]);
}

#[test]
fn unsolvable_everywhere() {
    let conflict = SHARED.replace("letimpl[10] first : !list_r (_ repr) -> _ = List.hd\n", "");
    let missing = format!("{RUNNING}\nletop nothing : 'a repr -> int\nlet g c = nothing c\n");
    for src in [conflict, missing] {
        let p = problem(&src);
        for k in SolverKind::ALL {
            if k == SolverKind::Smt && !have_z3() {
                continue;
            }
            assert_eq!(run(&p, k).outcome, Outcome::NoSolution, "{k}");
        }
    }
}

#[test]
fn empty_program_has_trivial_solution() {
    let p = problem("let x = 1\n");
    for k in SolverKind::ALL {
        if k == SolverKind::Smt && !have_z3() {
            continue;
        }
        let r = run(&p, k);
        assert_eq!(
            r.outcome,
            Outcome::Solutions(vec![ProgramSolution {
                sols: vec![],
                cost: 0.0
            }]),
            "{k}"
        );
    }
}

#[test]
fn smt_without_minimize_agrees() {
    if !have_z3() {
        return;
    }
    for src in [RUNNING, SHARED] {
        let p = problem(src);
        let mut o = SolveOptions::new(SolverKind::Smt);
        o.smt_path = "/usr/local/bin/z3".into();
        o.smt_minimize = false;
        let a = solve(&p, &env(), &o).unwrap();
        assert_eq!(costs(&a)[0], costs(&run(&p, SolverKind::BottomUp))[0]);
    }
}

#[test]
fn smt_missing_binary() {
    let p = problem(RUNNING);
    let mut o = SolveOptions::new(SolverKind::Smt);
    o.smt_path = "/nonexistent/z3".into();
    assert!(matches!(solve(&p, &env(), &o), Err(SolveError::Smt(SmtError::NotFound(_)))));
}

#[test]
fn smt_encoding_scaffolding() {
    let p = problem("let x = 1\n");
    let t = crate::soltree::build_tree(&p, &env()).unwrap();
    let e = encode_smt(&t);
    assert!(e.text.contains("(check-sat)"));
    assert!(e.text.contains("(minimize total_cost)"));
    assert_eq!(decode_values("unsat\n").unwrap(), None);
    let v = decode_values("sat\n((n0 true)\n (n1 false))\n").unwrap().unwrap();
    assert_eq!(v.get("n0"), Some(&true));
    assert_eq!(v.get("n1"), Some(&false));
}

#[test]
fn cache_round_trip() {
    let p = problem(RUNNING);
    let best = run(&p, SolverKind::BottomUp);
    let c = SolutionCache::from_solutions(&p, &best.best().unwrap().sols);
    assert_eq!(parse_cache(&c.to_text()).unwrap(), c);
    assert!(parse_cache("").unwrap().is_empty());
    assert!(matches!(parse_cache("reprsel-cache v9\n"), Err(CacheError::Version(_))));
    let trunc = format!("{CACHE_HEADER}\ncontains:abc(fold:12");
    assert!(matches!(parse_cache(&trunc), Err(CacheError::Malformed { line: 2, .. })));
}

#[test]
fn cache_is_closed_under_subs() {
    let p = problem(RUNNING);
    let s = Solution {
        impl_id: 3,
        subs: vec![Solution::leaf(1)],
    };
    let c = SolutionCache::from_solutions(&p, &[s.clone()]);
    assert_eq!(c.entries.len(), 2);
    assert!(c.entries.contains(&skeleton(&p, &s.subs[0])));
}

#[test]
fn transfer_keeps_cached_solution() {
    let p = problem(RUNNING);
    let prev = Solution {
        impl_id: 3,
        subs: vec![Solution::leaf(1)],
    };
    let mut o = SolveOptions::new(SolverKind::Transfer);
    o.cache = SolutionCache::from_solutions(&p, &[prev.clone()]);
    let r = solve(&p, &env(), &o).unwrap();
    assert_eq!(r.best().unwrap().sols, vec![prev]);
    assert_eq!(r.best().unwrap().cost, 20000.0);
}

#[test]
fn solver_names_round_trip() {
    for k in SolverKind::ALL {
        assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
    }
    assert!("fast".parse::<SolverKind>().is_err());
}
