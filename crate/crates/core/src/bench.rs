//! Benchmark harness: generated programs solved by several solvers.

use std::sync::Mutex;
use std::time::Duration;
use web_time::Instant;

use crate::gen::{gen_program, GenSpec, InitKind};
use crate::lang::CostEnv;
use crate::pipeline::analyze;
use crate::solvers::{solve, Outcome, SolveOptions, SolverKind};

pub const REPORT_HEADER: &str = "size,seed,solver,outcome,elapsed_ms,cost,normalized_cost";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub init: InitKind,
    pub solvers: Vec<SolverKind>,
    pub env: CostEnv,
    pub timeout: Option<Duration>,
    /// Template for per-cell solver options (cache and kind are replaced).
    pub base: SolveOptions,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub seed: u64,
    pub solver: SolverKind,
    /// `ok`, `no-solution`, `timeout` or `error`.
    pub outcome: &'static str,
    pub elapsed_ms: f64,
    pub cost: Option<f64>,
    pub normalized_cost: Option<f64>,
}

fn run_instance(cfg: &BenchConfig, size: usize, seed: u64) -> Vec<BenchRow> {
    let src = gen_program(&GenSpec {
        size,
        init: cfg.init,
        seed,
    });
    let analyzed = analyze(&src);
    let mut rows: Vec<BenchRow> = cfg
        .solvers
        .iter()
        .map(|&kind| {
            let mut row = BenchRow {
                size,
                seed,
                solver: kind,
                outcome: "error",
                elapsed_ms: 0.0,
                cost: None,
                normalized_cost: None,
            };
            let Ok(a) = &analyzed else {
                return row;
            };
            let opts = SolveOptions {
                kind,
                timeout: cfg.timeout,
                ..cfg.base.clone()
            };
            let start = Instant::now();
            let res = solve(&a.problem, &cfg.env, &opts);
            row.elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
            match res.map(|r| r.outcome) {
                Ok(Outcome::Solutions(s)) => {
                    row.outcome = "ok";
                    row.cost = s.first().map(|s| s.cost);
                }
                Ok(Outcome::NoSolution) => row.outcome = "no-solution",
                Ok(Outcome::Timeout) => row.outcome = "timeout",
                Err(_) => {}
            }
            row
        })
        .collect();
    let best = rows.iter().filter_map(|r| r.cost).fold(f64::INFINITY, f64::min);
    for r in &mut rows {
        r.normalized_cost = r.cost.map(|c| normalize(c, best));
    }
    rows
}

fn normalize(cost: f64, best: f64) -> f64 {
    if best == 0.0 {
        if cost == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        cost / best
    }
}

/// Solve every (size, seed) instance with every configured solver. Rows are
/// ordered by size, seed and solver regardless of `jobs`.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRow> {
    let cells: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let results: Vec<Mutex<Vec<BenchRow>>> = cells.iter().map(|_| Mutex::new(Vec::new())).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.max(1).min(cells.len().max(1)) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(&(size, seed)) = cells.get(i) else {
                    break;
                };
                *results[i].lock().unwrap() = run_instance(cfg, size, seed);
            });
        }
    });
    results.into_iter().flat_map(|m| m.into_inner().unwrap()).collect()
}

fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn format_report(rows: &[BenchRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{},{}\n",
            r.size,
            r.seed,
            r.solver,
            r.outcome,
            r.elapsed_ms,
            num(r.cost),
            num(r.normalized_cost)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sizes: Vec<usize>, solvers: Vec<SolverKind>) -> BenchConfig {
        BenchConfig {
            sizes,
            seeds: vec![1, 2],
            init: InitKind::Seq,
            solvers,
            env: [("n".to_string(), 100.0)].into_iter().collect(),
            timeout: Some(Duration::from_secs(20)),
            base: SolveOptions::new(SolverKind::Mixed),
            jobs: 2,
        }
    }

    #[test]
    fn empty_sizes_give_empty_report() {
        let rows = run_bench(&cfg(vec![], vec![SolverKind::BottomUp]));
        assert!(rows.is_empty());
        assert_eq!(format_report(&rows), format!("{REPORT_HEADER}\n"));
    }

    #[test]
    fn total_solvers_agree_and_are_optimal() {
        let rows = run_bench(&cfg(vec![2], vec![SolverKind::Exhaustive, SolverKind::BottomUp]));
        assert_eq!(rows.len(), 4);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].outcome, "ok");
            let (a, b) = (pair[0].cost.unwrap(), pair[1].cost.unwrap());
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            assert_eq!(pair[0].normalized_cost, Some(1.0));
            assert_eq!(pair[1].normalized_cost, Some(1.0));
        }
    }

    #[test]
    fn normalize_zero_best() {
        assert_eq!(normalize(0.0, 0.0), 1.0);
        assert_eq!(normalize(2.0, 0.0), f64::INFINITY);
        assert_eq!(normalize(6.0, 3.0), 2.0);
    }
}
