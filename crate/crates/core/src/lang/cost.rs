use std::collections::BTreeMap;

use super::ast::{CostExpr, CostOp};
use super::error::CostError;

pub type CostEnv = BTreeMap<String, f64>;

pub fn eval_cost_expr(expr: &CostExpr, env: &CostEnv) -> Result<f64, CostError> {
    let v = match expr {
        CostExpr::Lit(v) => *v,
        CostExpr::Var(name) => *env.get(name).ok_or_else(|| CostError::Unbound(name.clone()))?,
        CostExpr::Log(a) => eval_cost_expr(a, env)?.ln(),
        CostExpr::Bin(op, a, b) => {
            let a = eval_cost_expr(a, env)?;
            let b = eval_cost_expr(b, env)?;
            match op {
                CostOp::Add => a + b,
                CostOp::Sub => a - b,
                CostOp::Mul => a * b,
                CostOp::Div => {
                    if b == 0.0 {
                        return Err(CostError::DivByZero);
                    }
                    a / b
                }
                CostOp::Min => a.min(b),
                CostOp::Max => a.max(b),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CostError::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_cost;

    fn env(pairs: &[(&str, f64)]) -> CostEnv {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn min_n_w() {
        let c = parse_cost("min n W").unwrap();
        let e = env(&[("n", 10000.0), ("W", 63.0)]);
        assert_eq!(eval_cost_expr(&c, &e).unwrap(), 10000f64.min(63.0));
    }

    #[test]
    fn literal_and_unbound() {
        assert_eq!(eval_cost_expr(&CostExpr::Lit(1.0), &CostEnv::new()).unwrap(), 1.0);
        let err = eval_cost_expr(&CostExpr::Var("n".into()), &CostEnv::new()).unwrap_err();
        assert_eq!(err.to_string(), "unbound cost variable n");
    }

    #[test]
    fn division_and_log_errors() {
        let e = env(&[("n", 0.0)]);
        assert_eq!(eval_cost_expr(&parse_cost("1 / n").unwrap(), &e), Err(CostError::DivByZero));
        assert_eq!(eval_cost_expr(&parse_cost("log n").unwrap(), &e), Err(CostError::NonFinite));
        let e = env(&[("n", std::f64::consts::E)]);
        assert!((eval_cost_expr(&parse_cost("log n").unwrap(), &e).unwrap() - 1.0).abs() < 1e-12);
    }
}
