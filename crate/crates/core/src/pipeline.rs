//! Source text to solved and lowered program.

use thiserror::Error;

use crate::infer::{collect_problem, infer_program, AnnotatedProgram, TypeError};
use crate::lang::{expand_aliases, parse_program, print_program, AliasError, CostEnv, ParseError, Program};
use crate::lower::{apply_solution, check_resolved, LowerError, Lowered};
use crate::problem::{validate_program, Problem, ReprAssignment, Solution};
use crate::solvers::{solve, Outcome, SolveError, SolveOptions, SolverResult};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Alias(#[from] AliasError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Solve(#[from] SolveError),
    #[error("lowering failed: {0}")]
    Lower(#[from] LowerError),
}

/// A type-checked program and its selection problem.
#[derive(Debug, Clone)]
pub struct Analyzed {
    pub annotated: AnnotatedProgram,
    pub problem: Problem,
}

pub fn analyze(src: &str) -> Result<Analyzed, PipelineError> {
    analyze_program(&parse_program(src)?)
}

pub fn analyze_program(prog: &Program) -> Result<Analyzed, PipelineError> {
    let expanded = expand_aliases(prog)?;
    let annotated = infer_program(&expanded)?;
    let problem = collect_problem(&annotated);
    Ok(Analyzed { annotated, problem })
}

/// The best solution, lowered.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub sols: Vec<Solution>,
    pub cost: f64,
    pub assignment: ReprAssignment,
    pub lowered: Lowered,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub analyzed: Analyzed,
    pub result: SolverResult,
    /// Present when the solver found a solution.
    pub resolved: Option<Resolved>,
}

/// Lower `sols` and check the result.
pub fn resolve(a: &Analyzed, sols: &[Solution], cost: f64) -> Result<Resolved, PipelineError> {
    let pv = validate_program(&a.problem, sols)
        .map_err(|(j, e)| PipelineError::Lower(LowerError::Invalid(j, e)))?;
    let lowered = apply_solution(&a.annotated, &a.problem, sols)?;
    check_resolved(&lowered.program)?;
    Ok(Resolved {
        sols: sols.to_vec(),
        cost,
        assignment: pv.assignment,
        text: print_program(&lowered.program),
        lowered,
    })
}

pub fn compile(src: &str, env: &CostEnv, opts: &SolveOptions) -> Result<Compiled, PipelineError> {
    compile_analyzed(analyze(src)?, env, opts)
}

pub fn compile_analyzed(analyzed: Analyzed, env: &CostEnv, opts: &SolveOptions) -> Result<Compiled, PipelineError> {
    let result = solve(&analyzed.problem, env, opts)?;
    let resolved = match &result.outcome {
        Outcome::Solutions(s) => Some(resolve(&analyzed, &s[0].sols, s[0].cost)?),
        _ => None,
    };
    Ok(Compiled {
        analyzed,
        result,
        resolved,
    })
}
