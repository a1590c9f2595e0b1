use super::{Problem, Solution};
use crate::lang::cost::{eval_cost_expr, CostEnv};
use crate::lang::CostError;

/// `cost(sol) = eval(impl.cost) + Σᵢ cost(subᵢ) · eval(impl.usesᵢ.scale)`.
pub fn solution_cost(p: &Problem, sol: &Solution, env: &CostEnv) -> Result<f64, CostError> {
    let def = &p.impls[sol.impl_id];
    let mut total = eval_cost_expr(&def.cost, env)?;
    for (sub, u) in sol.subs.iter().zip(&def.uses) {
        total += solution_cost(p, sub, env)? * eval_cost_expr(&u.scale, env)?;
    }
    Ok(total)
}

/// Cost of a whole program: each top-level solution weighted by the scale
/// of its use.
pub fn total_cost(p: &Problem, sols: &[Solution], env: &CostEnv) -> Result<f64, CostError> {
    let mut total = 0.0;
    for (s, u) in sols.iter().zip(&p.uses) {
        total += eval_cost_expr(&u.use_.scale, env)? * solution_cost(p, s, env)?;
    }
    Ok(total)
}
