//! The solvers. Every solver partitions the tree into independent
//! components, simplifies each one and then searches it its own way.

mod cache;
mod heuristic;
mod smt;
mod total;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;
use web_time::Instant;

use thiserror::Error;

use crate::lang::CostEnv;
use crate::problem::{total_cost, validate_program, Problem, Solution};
use crate::soltree::{build_tree, flatten, partition, BuildError, Item, Propagator, SolTree};

pub use cache::{CACHE_HEADER, fingerprint, filter_tree, load_cache, parse_cache, save_cache, skeleton, CacheError, Skeleton, SolutionCache};
pub use heuristic::{solve_guided, solve_homogeneous, solve_mixed, MIXED_THRESHOLD};
pub use smt::{decode_values, encode_smt, solve_external_smt, SmtEncoding, SmtError};
pub use total::{solve_bottom_up, solve_exhaustive, solve_greedy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Exhaustive,
    BottomUp,
    Greedy,
    Smt,
    Homogeneous,
    Guided,
    Mixed,
    Transfer,
}

impl SolverKind {
    pub const ALL: [SolverKind; 8] = [
        SolverKind::Exhaustive,
        SolverKind::BottomUp,
        SolverKind::Greedy,
        SolverKind::Smt,
        SolverKind::Homogeneous,
        SolverKind::Guided,
        SolverKind::Mixed,
        SolverKind::Transfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Exhaustive => "exhaustive",
            SolverKind::BottomUp => "bottom-up",
            SolverKind::Greedy => "greedy",
            SolverKind::Smt => "smt",
            SolverKind::Homogeneous => "homogeneous",
            SolverKind::Guided => "guided",
            SolverKind::Mixed => "mixed",
            SolverKind::Transfer => "transfer",
        }
    }

    /// Solvers guaranteed to return an optimal solution when one exists.
    pub fn is_total(self) -> bool {
        matches!(
            self,
            SolverKind::Exhaustive | SolverKind::BottomUp | SolverKind::Greedy | SolverKind::Smt
        )
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub kind: SolverKind,
    pub timeout: Option<Duration>,
    /// External SMT solver binary.
    pub smt_path: PathBuf,
    /// Use the solver's `minimize` directive; otherwise tighten a bound.
    pub smt_minimize: bool,
    /// Previous solutions, for `transfer`.
    pub cache: SolutionCache,
}

impl SolveOptions {
    pub fn new(kind: SolverKind) -> SolveOptions {
        SolveOptions {
            kind,
            timeout: None,
            smt_path: PathBuf::from("z3"),
            smt_minimize: true,
            cache: SolutionCache::default(),
        }
    }
}

/// One solution per top-level use.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramSolution {
    pub sols: Vec<Solution>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solutions(Vec<ProgramSolution>),
    NoSolution,
    Timeout,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    pub nodes_visited: u64,
    pub elapsed: Duration,
    /// Product of the `Or` fan-outs over all components.
    pub solution_space_estimate: f64,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub outcome: Outcome,
    pub stats: Stats,
}

impl SolverResult {
    pub fn best(&self) -> Option<&ProgramSolution> {
        match &self.outcome {
            Outcome::Solutions(s) => s.first(),
            _ => None,
        }
    }
}

/// Result of searching one component.
#[derive(Debug, Clone)]
pub enum Found {
    Items(Vec<Item>),
    NoSolution,
    Timeout,
}

impl Found {
    pub(crate) fn from_items(items: Vec<Item>) -> Found {
        if items.is_empty() {
            Found::NoSolution
        } else {
            Found::Items(items)
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Per-component context shared by the solvers.
pub struct Search<'a> {
    pub opts: &'a SolveOptions,
    pub deadline: Option<Instant>,
    pub stats: &'a mut Stats,
}

impl Search<'_> {
    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Flatten and propagate (without pruning); `None` if the component has
/// no solution, `Err` on timeout.
pub fn simplify(t: &SolTree, deadline: Option<Instant>) -> Result<Option<SolTree>, ()> {
    let t = flatten(t);
    let mut pr = Propagator::new(false, deadline);
    let root = pr.run(t.root.clone());
    if pr.timed_out {
        return Err(());
    }
    Ok(root.map(|r| t.with_root(r)))
}

/// Run the solver `kind` on one simplified component.
pub fn solve_component(t: &SolTree, s: &mut Search) -> Result<Found, SolveError> {
    match s.opts.kind {
        SolverKind::Exhaustive => Ok(solve_exhaustive(t, s)),
        SolverKind::BottomUp => Ok(solve_bottom_up(t, s)),
        SolverKind::Greedy => Ok(solve_greedy(t, s)),
        SolverKind::Smt => Ok(solve_external_smt(t, s)?),
        SolverKind::Homogeneous => Ok(solve_homogeneous(t, s)),
        SolverKind::Guided => Ok(solve_guided(t, s)),
        SolverKind::Mixed | SolverKind::Transfer => Ok(solve_mixed(t, s)),
    }
}

/// Build the tree for `p`, solve it with `opts.kind` and validate the result.
pub fn solve(p: &Problem, env: &CostEnv, opts: &SolveOptions) -> Result<SolverResult, SolveError> {
    let start = Instant::now();
    let deadline = opts.timeout.map(|d| start + d);
    let mut stats = Stats {
        solution_space_estimate: 1.0,
        ..Stats::default()
    };
    let mut tree = build_tree(p, env)?;
    if opts.kind == SolverKind::Transfer {
        tree = filter_tree(&tree, p, &opts.cache);
    }
    let comps = partition(&tree);
    stats.components = comps.len();
    let mut per_comp: Vec<(SolTree, Vec<Item>)> = Vec::new();
    let mut outcome = None;
    for c in comps {
        let simplified = match simplify(&c, deadline) {
            Err(()) => {
                outcome = Some(Outcome::Timeout);
                break;
            }
            Ok(None) => {
                outcome = Some(Outcome::NoSolution);
                break;
            }
            Ok(Some(t)) => t,
        };
        stats.nodes_visited += simplified.root.count() as u64;
        let space = simplified.root.fanout_product();
        stats.solution_space_estimate *= space;
        let mut search = Search {
            opts,
            deadline,
            stats: &mut stats,
        };
        match solve_component(&simplified, &mut search)? {
            Found::Items(items) => per_comp.push((simplified, items)),
            Found::NoSolution => {
                outcome = Some(Outcome::NoSolution);
                break;
            }
            Found::Timeout => {
                outcome = Some(Outcome::Timeout);
                break;
            }
        }
    }
    let outcome = match outcome {
        Some(o) => o,
        None => Outcome::Solutions(combine(p, env, &per_comp)?),
    };
    stats.elapsed = start.elapsed();
    Ok(SolverResult { outcome, stats })
}

/// Every combination of one item per component, validated and sorted by cost.
fn combine(p: &Problem, env: &CostEnv, comps: &[(SolTree, Vec<Item>)]) -> Result<Vec<ProgramSolution>, SolveError> {
    let mut partial: Vec<(f64, BTreeMap<usize, Solution>)> = vec![(0.0, BTreeMap::new())];
    for (t, items) in comps {
        let mut decoded = Vec::new();
        for it in items {
            let m = t.reconstruct(p, &it.choice).map_err(SolveError::Internal)?;
            decoded.push((it.cost, m));
        }
        let mut next = Vec::new();
        for (c, m) in &partial {
            for (c2, m2) in &decoded {
                let mut m = m.clone();
                m.extend(m2.clone());
                next.push((c + c2, m));
            }
        }
        partial = next;
    }
    let mut out = Vec::new();
    for (tree_cost, m) in partial {
        let sols: Vec<Solution> = m.into_values().collect();
        validate_program(p, &sols)
            .map_err(|(j, e)| SolveError::Internal(format!("solver returned an invalid solution for use {j}: {e}")))?;
        let cost = total_cost(p, &sols, env).map_err(|e| SolveError::Internal(e.to_string()))?;
        if (cost - tree_cost).abs() > 1e-6 * cost.abs().max(1.0) {
            return Err(SolveError::Internal(format!(
                "tree cost {tree_cost} differs from solution cost {cost}"
            )));
        }
        out.push(ProgramSolution { sols, cost });
    }
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.sols.cmp(&b.sols)));
    Ok(out)
}

#[cfg(test)]
mod tests;
