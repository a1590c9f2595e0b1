//! Browser bindings. Every export takes plain strings and returns a JSON
//! string with either an `error` field or the result.

use reprsel::gen::{gen_program, GenSpec, InitKind};
use reprsel::lang::CostEnv;
use reprsel::pipeline::{analyze, compile_analyzed};
use reprsel::problem::{validate_program, Solution};
use reprsel::soltree::{build_tree, materialize_lazy};
use reprsel::solvers::{Outcome, SolveOptions, SolverKind};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Parses `n=1000, W=40` style bindings.
fn parse_env(s: &str) -> Result<CostEnv, String> {
    let mut env = CostEnv::new();
    for part in s.split([',', ';', '\n']).map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("`{part}`: expected NAME=VALUE"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("`{part}`: bad number"))?;
        env.insert(k.trim().to_string(), v);
    }
    Ok(env)
}

fn error(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn choices(sols: &[Solution], p: &reprsel::problem::Problem) -> Vec<Value> {
    fn one(s: &Solution, p: &reprsel::problem::Problem) -> Value {
        let subs: Vec<Value> = s.subs.iter().map(|x| one(x, p)).collect();
        json!({ "op": p.impls[s.impl_id].op, "impl": s.impl_id, "subs": subs })
    }
    sols.iter().map(|s| one(s, p)).collect()
}

fn compile_json(src: &str, solver: &str, costs: &str) -> Result<Value, String> {
    let kind: SolverKind = solver.parse()?;
    if kind == SolverKind::Smt {
        return Err("the smt solver needs an external process and is not available here".into());
    }
    let env = parse_env(costs)?;
    let analyzed = analyze(src).map_err(|e| e.to_string())?;
    let c = compile_analyzed(analyzed, &env, &SolveOptions::new(kind)).map_err(|e| e.to_string())?;
    let outcome = match c.result.outcome {
        Outcome::Solutions(_) => "ok",
        Outcome::NoSolution => "no-solution",
        Outcome::Timeout => "timeout",
    };
    Ok(match c.resolved {
        Some(r) => json!({
            "outcome": outcome,
            "cost": r.cost,
            "assignment": r.assignment.iter().map(|(k, v)| (format!("r{}", k.0), Value::String(v.clone()))).collect::<serde_json::Map<_, _>>(),
            "program": r.text,
            "nodes_visited": c.result.stats.nodes_visited,
        }),
        None => json!({ "outcome": outcome }),
    })
}

/// Solves and lowers `src`. `costs` binds cost variables, e.g. `n=1000`.
#[wasm_bindgen]
pub fn compile(src: &str, solver: &str, costs: &str) -> String {
    compile_json(src, solver, costs).map_or_else(error, |v| v.to_string())
}

/// A random benchmark program.
#[wasm_bindgen]
pub fn generate(size: u32, init: &str, seed: u32) -> String {
    match init.parse::<InitKind>() {
        Ok(init) => json!({
            "program": gen_program(&GenSpec { size: size as usize, init, seed: seed as u64 })
        })
        .to_string(),
        Err(e) => error(e),
    }
}

fn enumerate_json(src: &str, costs: &str, limit: usize) -> Result<Value, String> {
    let env = parse_env(costs)?;
    let a = analyze(src).map_err(|e| e.to_string())?;
    let p = &a.problem;
    let t = build_tree(p, &env).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for item in materialize_lazy(&t, None).take(limit) {
        let sols: Vec<Solution> = t.reconstruct(p, &item.choice)?.into_values().collect();
        let assignment = validate_program(p, &sols)
            .map(|v| v.assignment.into_iter().map(|(k, v)| (format!("r{}", k.0), Value::String(v))).collect())
            .unwrap_or_default();
        out.push(json!({
            "cost": item.cost,
            "assignment": Value::Object(assignment),
            "choices": choices(&sols, p),
        }));
    }
    Ok(json!({ "solutions": out }))
}

/// The `limit` cheapest valid solutions of `src`, in cost order.
#[wasm_bindgen]
pub fn enumerate(src: &str, costs: &str, limit: u32) -> String {
    enumerate_json(src, costs, limit as usize).map_or_else(error, |v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUNNING: &str = include_str!("../../core/corpus/running_example.rml");

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn compile_running_example() {
        let v = parse(&compile(RUNNING, "bottom-up", "n=10000, W=63"));
        assert_eq!(v["outcome"], "ok");
        assert_eq!(v["cost"].as_f64(), Some(63.0));
        assert!(v["program"].as_str().unwrap().contains("IntSet.contains"));
    }

    #[test]
    fn errors_are_reported() {
        assert!(parse(&compile(RUNNING, "bottom-up", "n=1"))["error"].as_str().unwrap().contains("W"));
        assert!(parse(&compile(RUNNING, "nope", "n=1"))["error"].is_string());
        assert!(parse(&compile(RUNNING, "smt", "n=1, W=1"))["error"].is_string());
        assert!(parse(&compile("let = 1", "mixed", ""))["error"].is_string());
        assert!(parse(&generate(1, "tree", 0))["error"].is_string());
    }

    #[test]
    fn enumerate_is_ordered() {
        let v = parse(&enumerate(RUNNING, "n=10000; W=63", 10));
        let costs: Vec<f64> = v["solutions"].as_array().unwrap().iter().map(|s| s["cost"].as_f64().unwrap()).collect();
        assert_eq!(costs, [63.0, 20000.0, 20000.0]);
    }

    #[test]
    fn generate_is_deterministic() {
        assert_eq!(generate(3, "set", 7), generate(3, "set", 7));
        assert!(parse(&generate(3, "set", 7))["program"].as_str().unwrap().contains("let bench"));
    }
}
