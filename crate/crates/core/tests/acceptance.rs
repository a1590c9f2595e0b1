//! One pass/fail line per acceptance criterion. Exits nonzero if any fails.

use std::collections::BTreeSet;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use reprsel::gen::{gen_program, GenSpec, InitKind};
use reprsel::lang::CostEnv;
use reprsel::pipeline::{analyze, resolve, Analyzed};
use reprsel::problem::{enumerate_use, total_cost, validate, validate_program, Problem, Solution, ValidationCtx};
use reprsel::soltree::{build_tree, collapse_leaves, propagate, Node};
use reprsel::solvers::{parse_cache, solve, Outcome, SolveError, SolveOptions, SolutionCache, SolverKind};

const RUNNING: &str = include_str!("../corpus/running_example.rml");
const SHOW_SEQ: &str = include_str!("../corpus/show_seq.rml");
const UCT_LITE: &str = include_str!("../corpus/uct_lite.rml");
const RECURSIVE: &str = include_str!("../corpus/recursive_defaults.rml");

const TOL: f64 = 1e-9;

/// Lowerings checked along the way, for criterion 10.
static LOWERED: Mutex<(usize, Vec<String>)> = Mutex::new((0, Vec::new()));

type Check = Result<String, String>;

fn env(pairs: &[(&str, f64)]) -> CostEnv {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn running_env() -> CostEnv {
    env(&[("n", 10000.0), ("W", 63.0)])
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn smt_available() -> bool {
    std::process::Command::new("z3").arg("-version").output().is_ok()
}

/// Lower a solver result and record whether it is fully resolved.
fn lower_checked(a: &Analyzed, sols: &[Solution], cost: f64) -> Result<String, String> {
    let res = resolve(a, sols, cost).map_err(|e| e.to_string()).and_then(|r| {
        let bad = r
            .text
            .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\''))
            .find(|w| matches!(*w, "letop" | "letimpl" | "letrepr" | "repr"));
        match bad {
            Some(w) => Err(format!("`{w}` left in lowered output")),
            None => Ok(r.text),
        }
    });
    let mut log = LOWERED.lock().unwrap();
    log.0 += 1;
    if let Err(e) = &res {
        log.1.push(e.clone());
    }
    res
}

fn run(a: &Analyzed, env: &CostEnv, kind: SolverKind) -> Result<Vec<(Vec<Solution>, f64)>, SolveError> {
    let mut opts = SolveOptions::new(kind);
    opts.timeout = Some(Duration::from_secs(60));
    run_with(a, env, &opts)
}

fn run_with(a: &Analyzed, env: &CostEnv, opts: &SolveOptions) -> Result<Vec<(Vec<Solution>, f64)>, SolveError> {
    match solve(&a.problem, env, opts)?.outcome {
        Outcome::Solutions(s) => Ok(s.into_iter().map(|s| (s.sols, s.cost)).collect()),
        Outcome::NoSolution => Ok(Vec::new()),
        Outcome::Timeout => Err(SolveError::Internal("timeout".into())),
    }
}

fn best(a: &Analyzed, env: &CostEnv, kind: SolverKind) -> Result<(Vec<Solution>, f64), String> {
    run(a, env, kind)
        .map_err(|e| format!("{kind}: {e}"))?
        .into_iter()
        .next()
        .ok_or_else(|| format!("{kind}: no solution"))
}

fn tail(text: &str, n: usize) -> Vec<&str> {
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(n)..].to_vec()
}

fn c1() -> Check {
    let a = analyze(RUNNING).map_err(|e| e.to_string())?;
    let all = run(&a, &running_env(), SolverKind::Exhaustive).map_err(|e| e.to_string())?;
    ensure(all.len() == 3, || format!("{} solutions", all.len()))?;
    let expected: [&[&str]; 3] = [
        &["let __impl_contains_0 = IntSet.contains", "let hasTwo coll = __impl_contains_0 2 coll"],
        &[
            "let __impl_fold_0 = List.fold_left",
            "let __impl_contains_1 elem coll = __impl_fold_0 (fun found x -> found || x = elem) false coll",
            "let hasTwo coll = __impl_contains_1 2 coll",
        ],
        &[
            "let __impl_fold_0 = IntSet.fold",
            "let __impl_contains_1 elem coll = __impl_fold_0 (fun found x -> found || x = elem) false coll",
            "let hasTwo coll = __impl_contains_1 2 coll",
        ],
    ];
    let mut got = BTreeSet::new();
    for (sols, cost) in &all {
        let text = lower_checked(&a, sols, *cost)?;
        let found = expected.iter().position(|e| tail(&text, e.len()) == **e);
        got.insert(found.ok_or_else(|| format!("unexpected listing:\n{text}"))?);
    }
    ensure(got.len() == 3, || "listings not distinct".into())?;
    Ok("3 solutions, one per lowered variant".into())
}

fn c2() -> Check {
    let a = analyze(RUNNING).map_err(|e| e.to_string())?;
    let e = running_env();
    let all = run(&a, &e, SolverKind::Exhaustive).map_err(|e| e.to_string())?;
    let mut costs: Vec<f64> = all
        .iter()
        .map(|(s, _)| total_cost(&a.problem, s, &e).unwrap())
        .collect();
    costs.sort_by(f64::total_cmp);
    ensure(
        costs.len() == 3 && close(costs[0], 63.0) && close(costs[1], 20000.0) && close(costs[2], 20000.0),
        || format!("formula costs {costs:?}"),
    )?;
    let mut kinds = vec![SolverKind::BottomUp, SolverKind::Greedy];
    if smt_available() {
        kinds.push(SolverKind::Smt);
    }
    for k in &kinds {
        let (sols, cost) = best(&a, &e, *k)?;
        ensure(close(cost, 63.0), || format!("{k}: cost {cost}"))?;
        let text = lower_checked(&a, &sols, cost)?;
        ensure(text.contains("= IntSet.contains"), || format!("{k}: not the IntSet.contains solution"))?;
    }
    let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
    Ok(format!("{} -> 63; others 20000, 20000", names.join(", ")))
}

fn singles(n: &Node) -> Vec<Vec<usize>> {
    match n {
        Node::Single { choice, .. } => vec![choice.clone()],
        Node::Or { children, .. } => children.iter().flat_map(singles).collect(),
        Node::And { .. } => Vec::new(),
    }
}

fn c3() -> Check {
    let a = analyze(RUNNING).map_err(|e| e.to_string())?;
    let p = &a.problem;
    let t = build_tree(p, &running_env()).map_err(|e| e.to_string())?;
    let unpruned = collapse_leaves(&propagate(&t, false), false, None).map_err(|_| "timeout")?;
    let pruned = collapse_leaves(&propagate(&t, true), true, None).map_err(|_| "timeout")?;
    let all = singles(&unpruned.root);
    let kept = singles(&pruned.root);
    ensure(all.len() == 3 && kept.len() == 2, || format!("{} -> {} singles", all.len(), kept.len()))?;
    let sols = |tree: &reprsel::soltree::SolTree, cs: &[Vec<usize>]| -> BTreeSet<Vec<Solution>> {
        cs.iter()
            .map(|c| tree.reconstruct(p, c).unwrap().into_values().collect())
            .collect()
    };
    let kept = sols(&pruned, &kept);
    let dropped: Vec<Vec<Solution>> = sols(&unpruned, &all).difference(&kept).cloned().collect();
    let fold_iset = p
        .impls
        .iter()
        .position(|d| d.op == "fold" && format!("{:?}", d.ty).contains("iset_r"))
        .unwrap();
    ensure(
        dropped.len() == 1 && dropped[0][0].impl_id == 3 && dropped[0][0].subs == [Solution::leaf(fold_iset)],
        || format!("dropped {dropped:?}"),
    )?;
    Ok("root Or keeps 2 of 3; default+iset dropped".into())
}

fn c4() -> Check {
    let a = analyze(RUNNING).map_err(|e| e.to_string())?;
    let sol = Solution {
        impl_id: 3,
        subs: vec![Solution::leaf(0)],
    };
    let v = validate_program(&a.problem, &[sol]).map_err(|(_, e)| e.to_string())?;
    let r7 = v.assignment.get(&reprsel::lang::ast::RVar(7));
    ensure(r7.map(String::as_str) == Some("list_r"), || format!("rvar 7 -> {r7:?}"))?;
    Ok("rvar 7 -> list_r".into())
}

/// Every joint solution accepted by `validate`, built use by use.
fn oracle(p: &Problem) -> BTreeSet<Vec<Solution>> {
    fn go(
        p: &Problem,
        cands: &[Vec<Solution>],
        ctx: &ValidationCtx,
        prefix: &mut Vec<Solution>,
        out: &mut BTreeSet<Vec<Solution>>,
    ) {
        let j = prefix.len();
        if j == cands.len() {
            out.insert(prefix.clone());
            return;
        }
        let u = &p.uses[j];
        for s in &cands[j] {
            let mut c = ctx.clone();
            if validate(p, s, &u.use_, &u.scope, &mut c).is_ok() {
                prefix.push(s.clone());
                go(p, cands, &c, prefix, out);
                prefix.pop();
            }
        }
    }
    let cands: Vec<Vec<Solution>> = p.uses.iter().map(|u| enumerate_use(p, &u.use_, &u.scope)).collect();
    let mut out = BTreeSet::new();
    go(p, &cands, &ValidationCtx::new(p), &mut Vec::new(), &mut out);
    out
}

fn gen_env() -> CostEnv {
    env(&[("n", 1000.0)])
}

fn c5(worst_ratio: &mut f64) -> Check {
    let smt = smt_available();
    let e = gen_env();
    let count = 216;
    for i in 0..count {
        let spec = GenSpec {
            size: i % 9,
            init: InitKind::ALL[(i / 9) % 3],
            seed: 1000 + i as u64,
        };
        let ctx = |m: String| format!("size={} init={} seed={}: {m}", spec.size, spec.init, spec.seed);
        let a = analyze(&gen_program(&spec)).map_err(|e| ctx(e.to_string()))?;
        let p = &a.problem;
        let valid = oracle(p);
        let all = run(&a, &e, SolverKind::Exhaustive).map_err(|e| ctx(e.to_string()))?;
        let got: BTreeSet<Vec<Solution>> = all.iter().map(|(s, _)| s.clone()).collect();
        ensure(got.len() == all.len(), || ctx("duplicate exhaustive solutions".into()))?;
        ensure(got == valid, || ctx(format!("exhaustive {} vs oracle {}", got.len(), valid.len())))?;
        let opt = valid
            .iter()
            .map(|s| total_cost(p, s, &e).unwrap())
            .fold(f64::INFINITY, f64::min);
        let mut totals = vec![SolverKind::Exhaustive, SolverKind::BottomUp, SolverKind::Greedy];
        if smt {
            totals.push(SolverKind::Smt);
        }
        for k in totals {
            let (sols, cost) = best(&a, &e, k).map_err(ctx)?;
            ensure(close(cost, opt), || ctx(format!("{k}: {cost} vs optimum {opt}")))?;
            ensure(close(total_cost(p, &sols, &e).unwrap(), cost), || ctx(format!("{k}: reported cost")))?;
            lower_checked(&a, &sols, cost).map_err(ctx)?;
        }
        let (msols, mcost) = best(&a, &e, SolverKind::Mixed).map_err(ctx)?;
        let mut topts = SolveOptions::new(SolverKind::Transfer);
        topts.cache = SolutionCache::from_solutions(p, &msols);
        let tr = run_with(&a, &e, &topts).map_err(|e| ctx(e.to_string()))?;
        let (tsols, tcost) = tr.into_iter().next().ok_or_else(|| ctx("transfer: no solution".into()))?;
        for (k, sols, cost) in [("mixed", &msols, mcost), ("transfer", &tsols, tcost)] {
            ensure(validate_program(p, sols).is_ok(), || ctx(format!("{k} result invalid")))?;
            ensure(cost >= opt - TOL * opt.abs().max(1.0), || ctx(format!("{k}: {cost} below optimum {opt}")))?;
            lower_checked(&a, sols, cost).map_err(ctx)?;
        }
        if opt > 0.0 {
            *worst_ratio = worst_ratio.max(mcost / opt);
        }
    }
    Ok(format!(
        "{count} programs; total solvers agree{}",
        if smt { " (smt included)" } else { " (smt not installed)" }
    ))
}

fn c6() -> Check {
    let a = analyze(SHOW_SEQ).map_err(|e| e.to_string())?;
    let ty = a
        .annotated
        .program
        .decls
        .iter()
        .zip(&a.annotated.decl_types)
        .find_map(|(d, t)| match d {
            reprsel::lang::ast::Decl::Let { name, annot: Some(t0), .. } if name == "show_seq" => {
                Some(t.clone().unwrap_or_else(|| t0.clone()))
            }
            _ => None,
        })
        .ok_or("no show_seq annotation")?;
    use reprsel::lang::ast::Type;
    let arrow = |t: &Type| match t {
        Type::Arrow(x, y) => Some(((**x).clone(), (**y).clone())),
        _ => None,
    };
    let (_, rest) = arrow(&ty).ok_or("show_seq is not a function")?;
    let (input, output) = arrow(&rest).ok_or("show_seq takes one argument")?;
    let rv = |t: &Type| t.rvars().into_iter().next().ok_or(format!("no rvar in {t:?}"));
    let (ri, ro) = (rv(&input)?, rv(&output)?);
    let e = env(&[("n", 1000.0)]);
    let mut seen = Vec::new();
    for k in [SolverKind::Mixed, SolverKind::BottomUp] {
        let (sols, cost) = best(&a, &e, k)?;
        let r = resolve(&a, &sols, cost).map_err(|e| e.to_string())?;
        lower_checked(&a, &sols, cost)?;
        let (gi, go) = (r.assignment.get(&ri), r.assignment.get(&ro));
        ensure(
            gi.map(String::as_str) == Some("list_r") && go.map(String::as_str) == Some("rope_r"),
            || format!("{k}: input {gi:?}, output {go:?}"),
        )?;
        seen.push(k.name());
    }
    Ok(format!("{}: input list_r, output rope_r", seen.join(", ")))
}

fn scaled(p: &Problem, k: f64) -> Problem {
    let mut q = p.clone();
    for d in &mut q.impls {
        d.cost = d.cost.scaled(k);
    }
    q
}

fn c7() -> Check {
    let e = gen_env();
    let mut kinds = vec![SolverKind::Exhaustive, SolverKind::BottomUp, SolverKind::Greedy];
    if smt_available() {
        kinds.push(SolverKind::Smt);
    }
    for i in 0..50u64 {
        let spec = GenSpec {
            size: 1 + (i as usize % 6),
            init: InitKind::ALL[i as usize % 3],
            seed: 5000 + i,
        };
        let a = analyze(&gen_program(&spec)).map_err(|e| e.to_string())?;
        for kind in &kinds {
            let mut base_opts = SolveOptions::new(*kind);
            base_opts.timeout = Some(Duration::from_secs(60));
            let first = |p: &Problem| -> Result<ProgramBest, String> {
                match solve(p, &e, &base_opts).map_err(|e| e.to_string())?.outcome {
                    Outcome::Solutions(s) => Ok((s[0].sols.clone(), s[0].cost)),
                    o => Err(format!("{o:?}")),
                }
            };
            let (s0, c0) = first(&a.problem)?;
            for k in [0.5, 2.0, 10.0] {
                let (s1, c1) = first(&scaled(&a.problem, k))?;
                ensure(s1 == s0, || format!("seed {} {kind} k={k}: different solution", spec.seed))?;
                ensure(close(c1, k * c0), || format!("seed {} {kind} k={k}: cost {c1} vs {}", spec.seed, k * c0))?;
            }
        }
    }
    Ok(format!("50 instances x k in {{0.5, 2, 10}} x {} solvers", kinds.len()))
}

type ProgramBest = (Vec<Solution>, f64);

fn c8() -> Check {
    let e = env(&[("n", 1000.0)]);
    let a = analyze(SHOW_SEQ).map_err(|e| e.to_string())?;
    let (msols, mcost) = best(&a, &e, SolverKind::Mixed)?;
    lower_checked(&a, &msols, mcost)?;
    let text = SolutionCache::from_solutions(&a.problem, &msols).to_text();
    let cache = parse_cache(&text).map_err(|e| e.to_string())?;
    let mut opts = SolveOptions::new(SolverKind::Transfer);
    opts.cache = cache;
    let (tsols, tcost) = run_with(&a, &e, &opts)
        .map_err(|e| e.to_string())?
        .into_iter()
        .next()
        .ok_or("transfer: no solution")?;
    ensure(validate_program(&a.problem, &tsols).is_ok(), || "transfer result invalid".into())?;
    ensure(close(tcost, mcost), || format!("transfer {tcost} vs mixed {mcost}"))?;
    lower_checked(&a, &tsols, tcost)?;
    let extended = format!("{SHOW_SEQ}\nlet twice s = concat s s\n");
    let b = analyze(&extended).map_err(|e| e.to_string())?;
    let (xsols, xcost) = run_with(&b, &e, &opts)
        .map_err(|e| e.to_string())?
        .into_iter()
        .next()
        .ok_or("transfer on extended program: no solution")?;
    ensure(validate_program(&b.problem, &xsols).is_ok(), || "extended result invalid".into())?;
    lower_checked(&b, &xsols, xcost)?;
    Ok(format!("unchanged cost {tcost}; extended program solved at {xcost}"))
}

fn c9(worst_ratio: &mut f64) -> Check {
    let e = gen_env();
    let mut slowest = Duration::ZERO;
    for (i, init) in InitKind::ALL.into_iter().enumerate() {
        for seed in 0..2u64 {
            let spec = GenSpec {
                size: 100,
                init,
                seed: 9000 + 10 * i as u64 + seed,
            };
            let a = analyze(&gen_program(&spec)).map_err(|e| e.to_string())?;
            let start = Instant::now();
            let (sols, _) = best(&a, &e, SolverKind::Mixed)?;
            let took = start.elapsed();
            slowest = slowest.max(took);
            ensure(took < Duration::from_secs(10), || format!("seed {}: {took:?}", spec.seed))?;
            ensure(validate_program(&a.problem, &sols).is_ok(), || "invalid mixed result".into())?;
        }
    }
    let corpus: Vec<(String, CostEnv)> = vec![
        (RUNNING.to_string(), running_env()),
        (SHOW_SEQ.to_string(), env(&[("n", 1000.0)])),
        (RECURSIVE.to_string(), env(&[("n", 1000.0)])),
        (
            format!("{UCT_LITE}\nlet s : int set = prepend 1 (prepend 2 empty)\nlet q : int seq = concat (prepend 1 empty) (append empty 3)\nlet k = size s + size q\n"),
            env(&[("n", 1000.0)]),
        ),
    ];
    for (src, ce) in &corpus {
        let a = analyze(src).map_err(|e| e.to_string())?;
        let (_, m) = best(&a, ce, SolverKind::Mixed)?;
        let (_, o) = best(&a, ce, SolverKind::BottomUp)?;
        if o > 0.0 {
            *worst_ratio = worst_ratio.max(m / o);
        } else if m > 0.0 {
            *worst_ratio = f64::INFINITY;
        }
    }
    ensure(*worst_ratio <= 10.0, || format!("normalized cost {worst_ratio}"))?;
    Ok(format!("100 blocks: slowest {slowest:.2?}; worst normalized cost {worst_ratio:.3}"))
}

fn c10() -> Check {
    let log = LOWERED.lock().unwrap();
    ensure(log.0 > 0, || "nothing lowered".into())?;
    ensure(log.1.is_empty(), || format!("{} failures, first: {}", log.1.len(), log.1[0]))?;
    Ok(format!("{} lowerings resolved", log.0))
}

fn main() {
    let mut ratio = 1.0f64;
    let mut results: Vec<(u32, &str, Check, Duration)> = Vec::new();
    let mut timed = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let r = f();
        results.push((n, name, r, start.elapsed()));
    };
    timed(1, "running example enumeration", &mut c1);
    timed(2, "running example optimum", &mut c2);
    timed(3, "pruning", &mut c3);
    timed(4, "validate oracle", &mut c4);
    timed(5, "cross-solver oracle equivalence", &mut || c5(&mut ratio));
    timed(6, "show_seq representation split", &mut c6);
    timed(7, "scaling invariance", &mut c7);
    timed(8, "transfer round-trip", &mut c8);
    timed(9, "performance proxy", &mut || c9(&mut ratio));
    timed(10, "lowering soundness", &mut c10);
    let limits: [(u32, Duration); 4] = [
        (1, Duration::from_secs(1)),
        (2, Duration::from_secs(1)),
        (3, Duration::from_secs(1)),
        (5, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (n, name, r, took) in results {
        let limit = limits.iter().find(|(k, _)| *k == n).map(|(_, d)| *d);
        let r = match (r, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {took:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        match r {
            Ok(detail) => println!("criterion {n}: PASS {name} ({detail}; {took:.2?})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL {name} ({why})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
