//! `reprsel`: compile RepML programs, generate benchmark programs, and run
//! the benchmark harness.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use reprsel::bench::{format_report, run_bench, BenchConfig};
use reprsel::gen::{gen_program, GenSpec, InitKind};
use reprsel::lang::{CostEnv, CostError};
use reprsel::pipeline::{analyze, compile_analyzed, PipelineError};
use reprsel::problem::{Problem, Solution};
use reprsel::soltree::{build_tree, render_tree, BuildError};
use reprsel::solvers::{encode_smt, load_cache, save_cache, CacheError, Outcome, SolveError, SolveOptions, SolutionCache, SolverKind};

/// Exit statuses.
mod status {
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const TYPE: u8 = 4;
    pub const NO_SOLUTION: u8 = 5;
    pub const TIMEOUT: u8 = 6;
    pub const SMT: u8 = 7;
    pub const CACHE: u8 = 8;
    pub const LOWER: u8 = 9;
}

#[derive(Parser)]
#[command(name = "reprsel", version, about = "Representation selection for RepML programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Resolved,
    Tree,
    Smt,
    Json,
    Annotated,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Solver to use.
    #[arg(long, default_value = "mixed", value_parser = parse_solver)]
    solver: SolverKind,
    /// Cost variable binding, e.g. `n=10000` (repeatable; no defaults).
    #[arg(long = "cost-var", value_name = "NAME=VALUE", value_parser = parse_cost_var)]
    cost_vars: Vec<(String, f64)>,
    /// Time limit for solving, in milliseconds.
    #[arg(long = "timeout-ms", value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: Option<u64>,
    /// Path of the SMT solver binary.
    #[arg(long = "smt-path", default_value = "z3")]
    smt_path: PathBuf,
    /// Worker threads (used by `bench`).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and lower a program.
    Compile {
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Solution cache to read (for `transfer`) and, with --write-cache, write.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Write the chosen solution to the --cache file.
        #[arg(long = "write-cache", requires = "cache")]
        write_cache: bool,
        /// What to print (repeatable).
        #[arg(long, value_enum)]
        emit: Vec<Emit>,
    },
    /// Print a random benchmark program.
    Gen {
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value = "seq", value_parser = parse_init)]
        init: InitKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve generated programs with several solvers and report a table.
    Bench {
        /// Program sizes in blocks (repeatable).
        #[arg(long = "size")]
        sizes: Vec<usize>,
        /// Number of seeds per size, starting at --seed.
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "seq", value_parser = parse_init)]
        init: InitKind,
        /// Solvers to compare (repeatable; default: all but smt).
        #[arg(long = "solver", value_parser = parse_solver)]
        solvers: Vec<SolverKind>,
        #[arg(long = "cost-var", value_name = "NAME=VALUE", value_parser = parse_cost_var)]
        cost_vars: Vec<(String, f64)>,
        #[arg(long = "timeout-ms", default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        timeout_ms: u64,
        #[arg(long = "smt-path", default_value = "z3")]
        smt_path: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_init(s: &str) -> Result<InitKind, String> {
    s.parse()
}

fn parse_cost_var(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value for {k}: {e}"))?;
    if k.trim().is_empty() {
        return Err("empty cost variable name".into());
    }
    Ok((k.trim().to_string(), v))
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Failure {
        Failure { code, msg: msg.into() }
    }
}

fn solve_failure(e: &SolveError) -> Failure {
    let code = match e {
        SolveError::Build(BuildError::Cost(CostError::Unbound(_))) => status::USAGE,
        SolveError::Smt(_) => status::SMT,
        _ => status::OTHER,
    };
    Failure::new(code, format!("solve: {e}"))
}

fn pipeline_failure(e: PipelineError) -> Failure {
    match &e {
        PipelineError::Parse(_) => Failure::new(status::PARSE, format!("parse: {e}")),
        PipelineError::Alias(_) | PipelineError::Type(_) => Failure::new(status::TYPE, format!("type: {e}")),
        PipelineError::Solve(s) => solve_failure(s),
        PipelineError::Lower(_) => Failure::new(status::LOWER, format!("lower: {e}")),
    }
}

fn cache_failure(e: CacheError) -> Failure {
    Failure::new(status::CACHE, format!("cache: {e}"))
}

fn env_of(vars: &[(String, f64)]) -> CostEnv {
    vars.iter().cloned().collect()
}

fn json_solution(p: &Problem, s: &Solution) -> serde_json::Value {
    serde_json::json!({
        "impl": s.impl_id,
        "op": p.impls[s.impl_id].op,
        "subs": s.subs.iter().map(|x| json_solution(p, x)).collect::<Vec<_>>(),
    })
}

fn compile(
    input: &Path,
    args: &SolverArgs,
    cache: Option<&Path>,
    write_cache: bool,
    emit: &[Emit],
) -> Result<String, Failure> {
    let src = std::fs::read_to_string(input).map_err(|e| Failure::new(status::OTHER, format!("{}: {e}", input.display())))?;
    let analyzed = analyze(&src).map_err(pipeline_failure)?;
    let env = env_of(&args.cost_vars);
    let mut opts = SolveOptions::new(args.solver);
    opts.timeout = args.timeout_ms.map(Duration::from_millis);
    opts.smt_path = args.smt_path.clone();
    if let Some(path) = cache {
        if path.exists() {
            opts.cache = load_cache(path).map_err(cache_failure)?;
        } else if !write_cache {
            return Err(Failure::new(status::CACHE, format!("cache: {} does not exist", path.display())));
        }
    }
    let emit = if emit.is_empty() { &[Emit::Resolved][..] } else { emit };
    let mut out = String::new();
    let header = |out: &mut String, name: &str| {
        if emit.len() > 1 {
            let _ = writeln!(out, "(* == {name} == *)");
        }
    };
    for e in emit {
        match e {
            Emit::Annotated => {
                header(&mut out, "annotated");
                out.push_str(&reprsel::infer::dump_annotated(&analyzed.annotated));
            }
            Emit::Tree | Emit::Smt => {
                let t = build_tree(&analyzed.problem, &env).map_err(|e| solve_failure(&SolveError::Build(e)))?;
                if *e == Emit::Tree {
                    header(&mut out, "tree");
                    out.push_str(&render_tree(&t, &analyzed.problem));
                } else {
                    header(&mut out, "smt");
                    out.push_str(&encode_smt(&t).text);
                }
            }
            _ => {}
        }
    }
    let compiled = compile_analyzed(analyzed, &env, &opts).map_err(pipeline_failure)?;
    let p = &compiled.analyzed.problem;
    let stats = &compiled.result.stats;
    let outcome = match &compiled.result.outcome {
        Outcome::Solutions(_) => "ok",
        Outcome::NoSolution => "no-solution",
        Outcome::Timeout => "timeout",
    };
    for e in emit {
        match (e, &compiled.resolved) {
            (Emit::Resolved, Some(r)) => {
                header(&mut out, "resolved");
                let _ = writeln!(out, "(* cost {} *)", r.cost);
                out.push_str(&r.text);
            }
            (Emit::Json, r) => {
                header(&mut out, "json");
                let assignment: BTreeMap<String, &String> = r
                    .iter()
                    .flat_map(|r| r.assignment.iter().map(|(k, v)| (format!("r{}", k.0), v)))
                    .collect();
                let v = serde_json::json!({
                    "solver": args.solver.name(),
                    "outcome": outcome,
                    "cost": r.as_ref().map(|r| r.cost),
                    "solutions": r.iter().flat_map(|r| r.sols.iter().map(|s| json_solution(p, s))).collect::<Vec<_>>(),
                    "assignment": assignment,
                    "stats": {
                        "nodes_visited": stats.nodes_visited,
                        "elapsed_ms": stats.elapsed.as_secs_f64() * 1000.0,
                        "solution_space_estimate": stats.solution_space_estimate,
                        "components": stats.components,
                    },
                });
                out.push_str(&serde_json::to_string_pretty(&v).expect("json value"));
                out.push('\n');
            }
            _ => {}
        }
    }
    match (&compiled.result.outcome, &compiled.resolved) {
        (Outcome::Solutions(_), Some(r)) => {
            if write_cache {
                let path = cache.expect("clap requires --cache");
                save_cache(&SolutionCache::from_solutions(p, &r.sols), path).map_err(cache_failure)?;
            }
            Ok(out)
        }
        (Outcome::Timeout, _) => Err(Failure::new(status::TIMEOUT, format!("{out}timeout: no solution within the time limit"))),
        _ => Err(Failure::new(status::NO_SOLUTION, format!("{out}no valid solution"))),
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.cmd {
        Cmd::Compile {
            input,
            solver,
            cache,
            write_cache,
            emit,
        } => compile(&input, &solver, cache.as_deref(), write_cache, &emit),
        Cmd::Gen { size, init, seed } => Ok(gen_program(&GenSpec { size, init, seed })),
        Cmd::Bench {
            sizes,
            seeds,
            seed,
            init,
            solvers,
            cost_vars,
            timeout_ms,
            smt_path,
            jobs,
        } => {
            let solvers = if solvers.is_empty() {
                SolverKind::ALL.into_iter().filter(|k| *k != SolverKind::Smt).collect()
            } else {
                solvers
            };
            let mut env = env_of(&cost_vars);
            env.entry("n".to_string()).or_insert(1000.0);
            let mut base = SolveOptions::new(SolverKind::Mixed);
            base.smt_path = smt_path;
            let cfg = BenchConfig {
                sizes,
                seeds: (seed..seed + seeds).collect(),
                init,
                solvers,
                env,
                timeout: Some(Duration::from_millis(timeout_ms)),
                base,
                jobs,
            };
            Ok(format_report(&run_bench(&cfg)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            // Emitted artifacts come first; the last line is the error.
            let (body, last) = match f.msg.rfind('\n') {
                Some(i) if i + 1 < f.msg.len() => f.msg.split_at(i + 1),
                _ => ("", f.msg.as_str()),
            };
            print!("{body}");
            eprintln!("reprsel: {last}");
            ExitCode::from(f.code)
        }
    }
}
