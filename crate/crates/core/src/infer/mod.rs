//! Type inference with representation variables.
//!
//! [`infer_program`] type-checks a program, records every op use with its
//! instantiated type, and numbers representation variables canonically.
//! [`collect_problem`] turns the result into a [`crate::problem::Problem`].

mod collect;
mod dump;
mod engine;
pub mod scheme;
pub mod unify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lang::ast::*;
use unify::zonk;

pub use collect::collect_problem;
pub use dump::dump_annotated;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeError {
    pub pos: Pos,
    /// Index of the offending declaration.
    pub decl: usize,
    pub msg: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: type error: {}", self.pos, self.msg)
    }
}

impl std::error::Error for TypeError {}

/// One occurrence of an op in an expression.
#[derive(Debug, Clone, PartialEq)]
pub struct UseSite {
    pub scale: CostExpr,
    pub op: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplInfo {
    pub decl: usize,
    pub cost: CostExpr,
    pub op: String,
    /// Desugared closed type, with `!r` nodes.
    pub ty: Type,
    pub uses: Vec<UseSite>,
    pub body: Expr,
}

/// An op use outside every implementation.
#[derive(Debug, Clone, PartialEq)]
pub struct TopUse {
    pub decl: usize,
    /// Position among the uses of the same declaration.
    pub site: usize,
    pub scale: CostExpr,
    pub op: String,
    pub ty: Type,
}

#[derive(Debug, Clone)]
pub struct AnnotatedProgram {
    /// The checked program; annotation `repr`s carry canonical rvars.
    pub program: Program,
    pub reprs: Vec<ReprDecl>,
    pub ops: Vec<(String, TypeScheme)>,
    pub impls: Vec<ImplInfo>,
    pub top_uses: Vec<TopUse>,
    /// Type of each let, op and extern declaration.
    pub decl_types: Vec<Option<Type>>,
    pub next_uvar: u32,
    pub next_rvar: u32,
    /// Top-level lets turned into op + implementation pairs.
    pub lifted: Vec<String>,
}

impl AnnotatedProgram {
    pub fn op(&self, name: &str) -> Option<&TypeScheme> {
        self.ops.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn repr_index(&self, name: &str) -> Option<usize> {
        self.reprs.iter().position(|r| r.name == name)
    }
}

fn mentions(e: &Expr, name: &str) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= matches!(x, Expr::Var(v) if v == name));
    found
}

fn decl_body(d: &Decl) -> Option<&Expr> {
    match d {
        Decl::Let { body, .. } => Some(body),
        Decl::Impl(i) => Some(&i.body),
        _ => None,
    }
}

/// Top-level value lets whose type mentions `repr` and that later code uses
/// become an op with a single zero-cost implementation, so that every use
/// can pick its own representation.
fn lift_lets(program: &Program, types: &[Option<Type>]) -> (Program, Vec<String>) {
    let mut out = Program::default();
    let mut lifted = Vec::new();
    for (i, d) in program.decls.iter().enumerate() {
        let pos = program.pos(i);
        if let Decl::Let {
            name,
            recursive: false,
            body,
            ..
        } = d
        {
            let ty = types[i].as_ref();
            let used_later = program.decls[i + 1..]
                .iter()
                .filter_map(decl_body)
                .any(|e| mentions(e, name));
            if let Some(ty) = ty.filter(|t| body.is_value() && t.contains_repr() && used_later) {
                let ty = rename_rigids(&ty.clear_rvars());
                out.push(
                    Decl::Op {
                        name: name.clone(),
                        scheme: TypeScheme::closed(ty.clone()),
                    },
                    pos,
                );
                out.push(
                    Decl::Impl(ImplDecl {
                        cost: CostExpr::Lit(0.0),
                        op: name.clone(),
                        annot: Some(ty),
                        body: body.clone(),
                    }),
                    pos,
                );
                lifted.push(name.clone());
                continue;
            }
        }
        out.push(d.clone(), pos);
    }
    (out, lifted)
}

/// Rename rigid variables to `'a`, `'b`, ... by first occurrence.
pub fn rename_rigids(t: &Type) -> Type {
    let names = t.rigid_names();
    let fresh: Vec<String> = scheme::fresh_names(&BTreeSet::new()).take(names.len()).collect();
    let map: BTreeMap<String, String> = names.into_iter().zip(fresh).collect();
    t.map(&mut |t| match t {
        Type::Rigid(n) => Type::Rigid(map[&n].clone()),
        t => t,
    })
}

pub fn infer_program(program: &Program) -> Result<AnnotatedProgram, TypeError> {
    let (eng, _) = engine::run(program)?;
    let types: Vec<Option<Type>> = eng.decl_types.iter().map(|t| t.as_ref().map(|t| zonk(&eng.st, t))).collect();
    let (program, lifted) = lift_lets(program, &types);
    let (eng, annotated) = engine::run(&program)?;
    Ok(canonicalize(eng, annotated, lifted))
}

struct Renumber {
    rvars: BTreeMap<RVar, RVar>,
    uvars: BTreeMap<UVar, UVar>,
}

impl Renumber {
    fn scan(&mut self, t: &Type) {
        t.walk(&mut |t| match t {
            Type::Repr(_, Some(r)) => {
                let n = self.rvars.len() as u32 + 1;
                self.rvars.entry(*r).or_insert(RVar(n));
            }
            Type::Var(u) => {
                let n = self.uvars.len() as u32 + 1;
                self.uvars.entry(*u).or_insert(UVar(n));
            }
            _ => {}
        });
    }

    fn apply(&mut self, t: &Type) -> Type {
        self.scan(t);
        t.map(&mut |t| match t {
            Type::Repr(a, Some(r)) => Type::Repr(a, Some(self.rvars[&r])),
            Type::Var(u) => Type::Var(self.uvars[&u]),
            t => t,
        })
    }
}


fn map_let_in_annots(e: &Expr, f: &mut impl FnMut(&Type) -> Type) -> Expr {
    let mut go = |e: &Expr| Box::new(map_let_in_annots(e, f));
    match e {
        Expr::Lambda(x, b) => Expr::Lambda(x.clone(), go(b)),
        Expr::App(a, b) => {
            let a = go(a);
            Expr::App(a, go(b))
        }
        Expr::LetIn {
            name,
            recursive,
            annot,
            bound,
            body,
        } => {
            let annot = annot.as_ref().map(&mut *f);
            Expr::LetIn {
                name: name.clone(),
                recursive: *recursive,
                annot,
                bound: Box::new(map_let_in_annots(bound, f)),
                body: Box::new(map_let_in_annots(body, f)),
            }
        }
        Expr::If(c, t, e2) => {
            let c = go(c);
            let t = go(t);
            Expr::If(c, t, go(e2))
        }
        Expr::Match(s, arms) => Expr::Match(
            Box::new(map_let_in_annots(s, f)),
            arms.iter()
                .map(|a| MatchArm {
                    body: map_let_in_annots(&a.body, f),
                    ..a.clone()
                })
                .collect(),
        ),
        Expr::Tuple(es) => Expr::Tuple(es.iter().map(|e| map_let_in_annots(e, f)).collect()),
        Expr::List(es) => Expr::List(es.iter().map(|e| map_let_in_annots(e, f)).collect()),
        Expr::Scaled(c, i) => Expr::Scaled(c.clone(), Box::new(map_let_in_annots(i, f))),
        e => e.clone(),
    }
}

/// Zonk everything and renumber rvars and uvars from 1 in declaration
/// order: op types, then implementation types followed by their uses, then
/// let annotations followed by their uses.
fn canonicalize(eng: engine::Engine, program: Program, lifted: Vec<String>) -> AnnotatedProgram {
    let st = &eng.st;
    let mut rn = Renumber {
        rvars: BTreeMap::new(),
        uvars: BTreeMap::new(),
    };
    let z = |t: &Type| zonk(st, t);
    let mut impls = eng.impls.clone();
    let mut impl_iter = 0;
    let mut top_uses = Vec::new();
    let mut out = program.clone();
    for (i, d) in out.decls.iter_mut().enumerate() {
        match d {
            Decl::Op { scheme, .. } | Decl::Extern { scheme, .. } => scheme.body = rn.apply(&z(&scheme.body)),
            Decl::Variant { ctors, .. } => {
                for c in ctors {
                    c.arg = c.arg.as_ref().map(|t| rn.apply(&z(t)));
                }
            }
            Decl::Impl(imp) => {
                let info = &mut impls[impl_iter];
                impl_iter += 1;
                info.ty = rn.apply(&z(&info.ty));
                imp.annot = imp.annot.as_ref().map(|t| rn.apply(&z(t)));
                imp.body = map_let_in_annots(&imp.body, &mut |t| rn.apply(&z(t)));
                info.body = imp.body.clone();
                for u in &mut info.uses {
                    u.ty = rn.apply(&z(&u.ty));
                }
            }
            Decl::Let { annot, body, .. } => {
                *annot = annot.as_ref().map(|t| rn.apply(&z(t)));
                *body = map_let_in_annots(body, &mut |t| rn.apply(&z(t)));
                for (k, u) in eng.decl_sites[i].iter().enumerate() {
                    top_uses.push(TopUse {
                        decl: i,
                        site: k,
                        scale: u.scale.clone(),
                        op: u.op.clone(),
                        ty: rn.apply(&z(&u.ty)),
                    });
                }
            }
            Decl::Type { .. } | Decl::Repr(_) => {}
        }
    }
    let decl_types = eng.decl_types.iter().map(|t| t.as_ref().map(|t| rn.apply(&z(t)))).collect();
    let ops = eng
        .ops
        .iter()
        .map(|(n, s)| {
            (
                n.clone(),
                TypeScheme {
                    quantified: s.quantified.clone(),
                    body: rn.apply(&z(&s.body)),
                },
            )
        })
        .collect();
    AnnotatedProgram {
        program: out,
        reprs: eng.reprs.clone(),
        ops,
        impls,
        top_uses,
        decl_types,
        next_uvar: rn.uvars.len() as u32 + 1,
        next_rvar: rn.rvars.len() as u32 + 1,
        lifted,
    }
}
