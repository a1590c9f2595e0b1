//! Applying a solution: every op use becomes a reference to a let-bound
//! copy of the chosen implementation, and `repr` types become concrete.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::infer::unify::{zonk, Store};
use crate::infer::{infer_program, AnnotatedProgram, TypeError};
use crate::lang::ast::*;
use crate::lang::{expand_aliases, TypePrinter};
use crate::problem::{alpha_normalize, apply_representation, validate_program, Problem, ProgramValidation, Solution, Trace};

#[derive(Debug, Error)]
pub enum LowerError {
    #[error("solution for op use {0} is invalid: {1}")]
    Invalid(usize, crate::problem::ValidateError),
    #[error("no representation matches `{0}`")]
    Unmatched(String),
    #[error("representation `{repr}` does not apply to `{arg}`")]
    Repr { repr: String, arg: String },
    #[error("lowered program still contains {0}")]
    Residual(String),
    #[error("lowered program does not type-check: {0}")]
    Type(#[from] TypeError),
    #[error("lowered program: {0}")]
    Alias(#[from] crate::lang::AliasError),
}

/// One emitted implementation binding.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplBinding {
    pub name: String,
    pub impl_id: usize,
    /// The instantiated implementation type, for reporting.
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lowered {
    pub program: Program,
    pub bindings: Vec<ImplBinding>,
}

struct Lowerer<'a> {
    ap: &'a AnnotatedProgram,
    p: &'a Problem,
    pv: &'a ProgramValidation,
    /// Dedup key -> index into `bindings`.
    keys: BTreeMap<(usize, String, Vec<String>), usize>,
    bindings: Vec<ImplBinding>,
    /// Emitted lets, each with the declaration index it must follow.
    lets: Vec<(usize, Decl)>,
}

/// Names of ops visible at each declaration.
fn ops_before(program: &Program) -> Vec<BTreeSet<String>> {
    let mut cur = BTreeSet::new();
    let mut out = Vec::new();
    for d in &program.decls {
        out.push(cur.clone());
        if let Decl::Op { name, .. } = d {
            cur.insert(name.clone());
        }
    }
    out
}

/// Replace the op uses of `e`, in inference order, by the given names.
fn rewrite_uses(e: &Expr, ops: &BTreeSet<String>, names: &[String]) -> Expr {
    fn go(e: &Expr, ops: &BTreeSet<String>, locals: &mut Vec<String>, names: &[String], next: &mut usize) -> Expr {
        let is_op = |n: &str, locals: &Vec<String>| ops.contains(n) && !locals.iter().any(|l| l == n);
        match e {
            Expr::Var(n) if is_op(n, locals) => {
                *next += 1;
                Expr::Var(names[*next - 1].clone())
            }
            Expr::Scaled(_, inner) if matches!(&**inner, Expr::Var(n) if is_op(n, locals)) => {
                *next += 1;
                Expr::Var(names[*next - 1].clone())
            }
            Expr::Var(_) | Expr::Lit(_) => e.clone(),
            Expr::Scaled(c, inner) => Expr::Scaled(c.clone(), Box::new(go(inner, ops, locals, names, next))),
            Expr::Lambda(x, b) => {
                locals.push(x.clone());
                let b = go(b, ops, locals, names, next);
                locals.pop();
                Expr::Lambda(x.clone(), Box::new(b))
            }
            Expr::App(f, a) => {
                let f = go(f, ops, locals, names, next);
                let a = go(a, ops, locals, names, next);
                Expr::app(f, a)
            }
            Expr::LetIn {
                name,
                recursive,
                annot,
                bound,
                body,
            } => {
                if *recursive {
                    locals.push(name.clone());
                }
                let bound = go(bound, ops, locals, names, next);
                if !*recursive {
                    locals.push(name.clone());
                }
                let body = go(body, ops, locals, names, next);
                locals.pop();
                Expr::LetIn {
                    name: name.clone(),
                    recursive: *recursive,
                    annot: annot.clone(),
                    bound: Box::new(bound),
                    body: Box::new(body),
                }
            }
            Expr::If(c, t, f) => Expr::If(
                Box::new(go(c, ops, locals, names, next)),
                Box::new(go(t, ops, locals, names, next)),
                Box::new(go(f, ops, locals, names, next)),
            ),
            Expr::Match(s, arms) => {
                let s = go(s, ops, locals, names, next);
                let arms = arms
                    .iter()
                    .map(|a| {
                        let depth = locals.len();
                        locals.extend(a.binders.iter().filter(|b| *b != "_").cloned());
                        let body = go(&a.body, ops, locals, names, next);
                        locals.truncate(depth);
                        MatchArm {
                            ctor: a.ctor.clone(),
                            binders: a.binders.clone(),
                            body,
                        }
                    })
                    .collect();
                Expr::Match(Box::new(s), arms)
            }
            Expr::Tuple(es) => Expr::Tuple(es.iter().map(|x| go(x, ops, locals, names, next)).collect()),
            Expr::List(es) => Expr::List(es.iter().map(|x| go(x, ops, locals, names, next)).collect()),
        }
    }
    let mut next = 0;
    go(e, ops, &mut Vec::new(), names, &mut next)
}

/// Map every annotation type inside `e`.
fn map_annots(e: &Expr, f: &mut impl FnMut(&Type) -> Option<Type>) -> Expr {
    match e {
        Expr::Var(_) | Expr::Lit(_) => e.clone(),
        Expr::Scaled(c, i) => Expr::Scaled(c.clone(), Box::new(map_annots(i, f))),
        Expr::Lambda(x, b) => Expr::Lambda(x.clone(), Box::new(map_annots(b, f))),
        Expr::App(a, b) => Expr::app(map_annots(a, f), map_annots(b, f)),
        Expr::LetIn {
            name,
            recursive,
            annot,
            bound,
            body,
        } => Expr::LetIn {
            name: name.clone(),
            recursive: *recursive,
            annot: annot.as_ref().and_then(|t| f(t)),
            bound: Box::new(map_annots(bound, f)),
            body: Box::new(map_annots(body, f)),
        },
        Expr::If(c, t, x) => Expr::If(
            Box::new(map_annots(c, f)),
            Box::new(map_annots(t, f)),
            Box::new(map_annots(x, f)),
        ),
        Expr::Match(s, arms) => Expr::Match(
            Box::new(map_annots(s, f)),
            arms.iter()
                .map(|a| MatchArm {
                    ctor: a.ctor.clone(),
                    binders: a.binders.clone(),
                    body: map_annots(&a.body, f),
                })
                .collect(),
        ),
        Expr::Tuple(es) => Expr::Tuple(es.iter().map(|x| map_annots(x, f)).collect()),
        Expr::List(es) => Expr::List(es.iter().map(|x| map_annots(x, f)).collect()),
    }
}

impl Lowerer<'_> {
    /// Concrete version of `t`: each `repr` takes the representation of its
    /// rvar, or the first declared one that fits if the rvar is unassigned.
    fn concrete(&self, t: &Type) -> Result<Type, LowerError> {
        let mut err = None;
        let store = &self.pv.ctx.store;
        let out = zonk(store, t).strip_assignments().map(&mut |t| match t {
            Type::Repr(a, r) => {
                let assigned = r.and_then(|r| store.assignment(store.find(r)));
                let res = match assigned {
                    Some(i) => {
                        let d = &self.p.reprs[i];
                        apply_representation(d, &a).map_err(|_| LowerError::Repr {
                            repr: d.name.clone(),
                            arg: crate::lang::print_type(&a),
                        })
                    }
                    None => self
                        .p
                        .reprs
                        .iter()
                        .find_map(|d| apply_representation(d, &a).ok())
                        .ok_or_else(|| LowerError::Unmatched(crate::lang::print_type(&Type::Repr(a.clone(), None)))),
                };
                res.unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    Type::Wildcard
                })
            }
            t => t,
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Emit (or reuse) the binding for `trace`; returns its name and the
    /// declaration index it must follow.
    fn bind(&mut self, trace: &Trace, ops: &[BTreeSet<String>]) -> Result<(String, usize), LowerError> {
        let mut subs = Vec::new();
        let mut after = self.ap.impls[trace.impl_id].decl;
        for s in &trace.subs {
            let (n, a) = self.bind(s, ops)?;
            after = after.max(a);
            subs.push(n);
        }
        let ty = self.concrete(&trace.ty)?;
        let shown = TypePrinter::default().print(&alpha_normalize(&ty));
        let key = (trace.impl_id, shown.clone(), subs.clone());
        if let Some(&i) = self.keys.get(&key) {
            return Ok((self.bindings[i].name.clone(), self.lets[i].0));
        }
        let info = &self.ap.impls[trace.impl_id];
        let name = format!("__impl_{}_{}", info.op, self.bindings.len());
        // Annotations inside implementation bodies refer to per-instance
        // rvars; drop the ones that mention `repr`.
        let body = map_annots(&info.body, &mut |t| (!t.contains_repr()).then(|| t.clone()));
        let body = rewrite_uses(&body, &ops[info.decl], &subs);
        self.keys.insert(key, self.bindings.len());
        self.bindings.push(ImplBinding {
            name: name.clone(),
            impl_id: trace.impl_id,
            ty: shown,
        });
        self.lets.push((
            after,
            Decl::Let {
                name: name.clone(),
                recursive: false,
                annot: None,
                body,
            },
        ));
        Ok((name, after))
    }
}

/// Lower `ap` under one solution per top-level op use of `p`.
pub fn apply_solution(ap: &AnnotatedProgram, p: &Problem, sols: &[Solution]) -> Result<Lowered, LowerError> {
    let pv = validate_program(p, sols).map_err(|(j, e)| LowerError::Invalid(j, e))?;
    let ops = ops_before(&ap.program);
    let mut lw = Lowerer {
        ap,
        p,
        pv: &pv,
        keys: BTreeMap::new(),
        bindings: Vec::new(),
        lets: Vec::new(),
    };
    // Names for the uses of each declaration, by site.
    let mut site_names: BTreeMap<usize, BTreeMap<usize, String>> = BTreeMap::new();
    for (j, u) in p.uses.iter().enumerate() {
        let (name, _) = lw.bind(&pv.traces[j], &ops)?;
        site_names.entry(u.decl).or_default().insert(u.site, name);
    }
    let mut out = Program::default();
    let mut pending: Vec<(usize, Decl)> = std::mem::take(&mut lw.lets);
    pending.sort_by_key(|(a, _)| *a);
    let mut pending = pending.into_iter().peekable();
    for (i, d) in ap.program.decls.iter().enumerate() {
        let pos = ap.program.pos(i);
        let kept = match d {
            Decl::Repr(_) | Decl::Op { .. } | Decl::Impl(_) => None,
            Decl::Type { alias: Some(rhs), .. } if rhs.contains_repr() => None,
            Decl::Let {
                name,
                recursive,
                annot,
                body,
            } => {
                let names: Vec<String> = site_names
                    .get(&i)
                    .map(|m| m.values().cloned().collect())
                    .unwrap_or_default();
                let body = rewrite_uses(body, &ops[i], &names);
                let mut failed = None;
                let body = map_annots(&body, &mut |t| match lw.concrete(t) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        failed.get_or_insert(e);
                        None
                    }
                });
                if let Some(e) = failed {
                    return Err(e);
                }
                Some(Decl::Let {
                    name: name.clone(),
                    recursive: *recursive,
                    annot: annot.as_ref().map(|t| lw.concrete(t)).transpose()?,
                    body,
                })
            }
            d => Some(d.clone()),
        };
        if let Some(d) = kept {
            out.push(d, pos);
        }
        while let Some((_, d)) = pending.next_if(|(a, _)| *a == i) {
            out.push(d, pos);
        }
    }
    Ok(Lowered {
        program: out,
        bindings: lw.bindings,
    })
}

fn residual_in_type(t: &Type) -> Option<&'static str> {
    let mut found = None;
    t.walk(&mut |t| match t {
        Type::Repr(..) => found = found.or(Some("a `repr` type")),
        Type::Assign(..) => found = found.or(Some("a `!r` annotation")),
        Type::Wildcard => found = found.or(Some("a `_` type")),
        _ => {}
    });
    found
}

/// Check that `prog` has no representation constructs left and type-checks.
pub fn check_resolved(prog: &Program) -> Result<(), LowerError> {
    for d in &prog.decls {
        let mut types: Vec<&Type> = Vec::new();
        match d {
            Decl::Repr(_) | Decl::Op { .. } | Decl::Impl(_) => {
                return Err(LowerError::Residual(format!("a `{}` declaration", d.keyword())))
            }
            Decl::Type { alias: Some(t), .. } => types.push(t),
            Decl::Extern { scheme, .. } => types.push(&scheme.body),
            Decl::Let { annot, body, .. } => {
                types.extend(annot.iter());
                body.walk(&mut |e| {
                    if let Expr::LetIn { annot: Some(t), .. } = e {
                        types.push(t);
                    }
                });
            }
            _ => {}
        }
        if let Some(what) = types.into_iter().find_map(residual_in_type) {
            return Err(LowerError::Residual(what.to_string()));
        }
    }
    let expanded = expand_aliases(prog)?;
    infer_program(&expanded)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::print_program;
    use crate::pipeline::analyze;

    const RUNNING: &str = include_str!("../../corpus/running_example.rml");

    fn lower(sols: &[Solution]) -> Lowered {
        let a = analyze(RUNNING).unwrap();
        let l = apply_solution(&a.annotated, &a.problem, sols).unwrap();
        check_resolved(&l.program).unwrap();
        l
    }

    fn tail(l: &Lowered, n: usize) -> Vec<String> {
        let text = print_program(&l.program);
        let lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[lines.len() - n..].to_vec()
    }

    #[test]
    fn iset_variant() {
        let l = lower(&[Solution::leaf(2)]);
        assert_eq!(
            tail(&l, 2),
            ["let __impl_contains_0 = IntSet.contains", "let hasTwo coll = __impl_contains_0 2 coll"]
        );
    }

    #[test]
    fn default_list_variant() {
        let l = lower(&[Solution {
            impl_id: 3,
            subs: vec![Solution::leaf(0)],
        }]);
        assert_eq!(
            tail(&l, 3),
            [
                "let __impl_fold_0 = List.fold_left",
                "let __impl_contains_1 elem coll = __impl_fold_0 (fun found x -> found || x = elem) false coll",
                "let hasTwo coll = __impl_contains_1 2 coll",
            ]
        );
        assert_eq!(l.bindings.len(), 2);
    }

    #[test]
    fn identical_uses_share_a_binding() {
        let src = format!("{RUNNING}\nlet twice c = contains 2 c && contains 2 c\n");
        let a = analyze(&src).unwrap();
        let sols = vec![Solution::leaf(2), Solution::leaf(2), Solution::leaf(2)];
        let l = apply_solution(&a.annotated, &a.problem, &sols).unwrap();
        check_resolved(&l.program).unwrap();
        assert_eq!(l.bindings.len(), 1);
    }

    #[test]
    fn no_uses_only_drops_declarations() {
        let src = "letrepr list_r {'a = 'a list}\nletop len : 'a repr -> int\nlet x = 1\n";
        let a = analyze(src).unwrap();
        let l = apply_solution(&a.annotated, &a.problem, &[]).unwrap();
        assert_eq!(print_program(&l.program).trim(), "let x = 1");
    }

    #[test]
    fn invalid_solution_rejected() {
        let a = analyze(RUNNING).unwrap();
        assert!(matches!(
            apply_solution(&a.annotated, &a.problem, &[Solution::leaf(0)]),
            Err(LowerError::Invalid(0, _))
        ));
    }

    #[test]
    fn residual_repr_detected() {
        let p = crate::lang::parse_program("external f : int repr -> int\n").unwrap();
        assert!(matches!(check_resolved(&p), Err(LowerError::Residual(_))));
        let p = crate::lang::parse_program("letrepr list_r {'a = 'a list}\n").unwrap();
        assert!(matches!(check_resolved(&p), Err(LowerError::Residual(_))));
    }
}
