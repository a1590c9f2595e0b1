//! Hindley-Milner inference extended with representation variables.

use std::collections::{BTreeSet, HashMap};

use super::scheme::{assign_rvars, instantiate};
use super::unify::{unify, zonk, InferStore, Store, UnifyError};
use super::{ImplInfo, TypeError, UseSite};
use crate::lang::ast::*;
use crate::lang::desugar::desugar_impl_annotation;
use crate::lang::printer::TypePrinter;
use crate::problem::apply_assignments;

#[derive(Debug, Clone)]
enum Binding {
    Op,
    Poly(TypeScheme),
    Mono(Type),
}

#[derive(Debug, Clone)]
struct CtorInfo {
    params: Vec<String>,
    arg: Option<Type>,
    result: Type,
}

pub(super) struct Engine {
    pub st: InferStore,
    globals: HashMap<String, Binding>,
    locals: Vec<(String, Binding)>,
    ctors: HashMap<String, CtorInfo>,
    pub reprs: Vec<ReprDecl>,
    pub ops: Vec<(String, TypeScheme)>,
    sites: Vec<UseSite>,
    gen_counter: u32,
    pub impls: Vec<ImplInfo>,
    /// Per declaration: its op-use sites (lets only) and closed type.
    pub decl_sites: Vec<Vec<UseSite>>,
    pub decl_types: Vec<Option<Type>>,
}

type R<T> = Result<T, String>;

fn show(t: &Type) -> String {
    TypePrinter::with_rvars().print(t)
}

fn unify_msg(e: UnifyError) -> String {
    e.to_string()
}

impl Engine {
    pub fn new() -> Engine {
        let mut e = Engine {
            st: InferStore::default(),
            globals: HashMap::new(),
            locals: Vec::new(),
            ctors: HashMap::new(),
            reprs: Vec::new(),
            ops: Vec::new(),
            sites: Vec::new(),
            gen_counter: 0,
            impls: Vec::new(),
            decl_sites: Vec::new(),
            decl_types: Vec::new(),
        };
        e.builtins();
        e
    }

    fn builtins(&mut self) {
        let a = || Type::rigid("a");
        let int = || Type::nullary("int");
        let bool_ = || Type::nullary("bool");
        let string = || Type::nullary("string");
        let mut add = |name: &str, t: Type| {
            self.globals.insert(name.to_string(), Binding::Poly(TypeScheme::closed(t)));
        };
        for op in ["||", "&&"] {
            add(op, Type::arrows(vec![bool_(), bool_()], bool_()));
        }
        for op in ["=", "<>", "<", ">", "<=", ">="] {
            add(op, Type::arrows(vec![a(), a()], bool_()));
        }
        for op in ["+", "-", "*", "/"] {
            add(op, Type::arrows(vec![int(), int()], int()));
        }
        add("^", Type::arrows(vec![string(), string()], string()));
        add("Sys.opaque_identity", Type::arrow(a(), a()));
        add("not", Type::arrow(bool_(), bool_()));
        let opt = Type::con("option", vec![a()]);
        self.ctors.insert(
            "None".into(),
            CtorInfo {
                params: vec!["a".into()],
                arg: None,
                result: opt.clone(),
            },
        );
        self.ctors.insert(
            "Some".into(),
            CtorInfo {
                params: vec!["a".into()],
                arg: Some(a()),
                result: opt,
            },
        );
    }

    fn fresh(&mut self) -> Type {
        self.st.fresh_var()
    }

    fn unify(&mut self, a: &Type, b: &Type) -> R<()> {
        unify(&mut self.st, a, b).map_err(unify_msg)
    }

    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.locals
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b)
            .or_else(|| self.globals.get(name))
    }

    fn op_scheme(&self, name: &str) -> &TypeScheme {
        &self.ops.iter().find(|(n, _)| n == name).expect("declared op").1
    }

    fn use_op(&mut self, name: &str, scale: CostExpr) -> Type {
        let scheme = self.op_scheme(name).clone();
        let (ty, _) = instantiate(&scheme, &mut self.st, true);
        self.sites.push(UseSite {
            scale,
            op: name.to_string(),
            ty: ty.clone(),
        });
        ty
    }

    fn instantiate_ctor(&mut self, name: &str) -> R<(Option<Type>, Type)> {
        let info = self
            .ctors
            .get(name)
            .cloned()
            .ok_or_else(|| format!("unknown constructor {name}"))?;
        let mut sub = HashMap::new();
        for p in &info.params {
            sub.insert(p.clone(), self.fresh());
        }
        let mut inst = |t: &Type| {
            t.map(&mut |t| match t {
                Type::Rigid(n) => sub.get(&n).cloned().unwrap_or(Type::Rigid(n)),
                t => t,
            })
        };
        let arg = info.arg.as_ref().map(&mut inst);
        let result = inst(&info.result);
        Ok((arg, result))
    }

    /// Annotation in an expression or let: rigid names are unification
    /// variables shared by name, `_` is a fresh variable.
    fn annotation_type(&mut self, t: &Type) -> Type {
        let mut names: HashMap<String, Type> = HashMap::new();
        let t = assign_rvars(t, &mut self.st);
        t.map(&mut |t| match t {
            Type::Rigid(n) => names.entry(n).or_insert_with(|| self.st.fresh_var()).clone(),
            Type::Wildcard => self.st.fresh_var(),
            t => t,
        })
    }

    fn env_uvars(&self) -> BTreeSet<UVar> {
        let mut out = BTreeSet::new();
        let mut add = |b: &Binding| match b {
            Binding::Op => {}
            Binding::Poly(s) => out.extend(zonk(&self.st, &s.body).uvars()),
            Binding::Mono(t) => out.extend(zonk(&self.st, t).uvars()),
        };
        self.globals.values().for_each(&mut add);
        self.locals.iter().for_each(|(_, b)| add(b));
        out
    }

    /// Generalize the free uvars of `t` not in the environment by binding
    /// them to fresh rigid names.
    fn generalize(&mut self, t: &Type) -> TypeScheme {
        let z = zonk(&self.st, t);
        let env = self.env_uvars();
        let mut quantified = Vec::new();
        for u in z.uvars() {
            if env.contains(&u) {
                continue;
            }
            let name = format!("_g{}", self.gen_counter);
            self.gen_counter += 1;
            self.st.bind(u, Type::Rigid(name.clone())).expect("dense store");
            quantified.push(name);
        }
        TypeScheme {
            quantified,
            body: zonk(&self.st, &z),
        }
    }

    fn infer(&mut self, e: &Expr) -> R<Type> {
        match e {
            Expr::Var(name) => self.infer_var(name, None),
            Expr::Scaled(c, inner) => match &**inner {
                Expr::Var(name) => self.infer_var(name, Some(c.clone())),
                _ => Err("a cost scale `@c` must be applied to an op".into()),
            },
            Expr::Lambda(x, body) => {
                let a = self.fresh();
                self.locals.push((x.clone(), Binding::Mono(a.clone())));
                let b = self.infer(body);
                self.locals.pop();
                Ok(Type::arrow(a, b?))
            }
            Expr::App(f, a) => {
                let tf = self.infer(f)?;
                let ta = self.infer(a)?;
                let r = self.fresh();
                self.unify(&tf, &Type::arrow(ta, r.clone()))?;
                Ok(r)
            }
            Expr::LetIn {
                name,
                recursive,
                annot,
                bound,
                body,
            } => {
                let binding = self.infer_binding(name, *recursive, annot.as_ref(), bound)?;
                self.locals.push((name.clone(), binding));
                let t = self.infer(body);
                self.locals.pop();
                t
            }
            Expr::If(c, t, f) => {
                let tc = self.infer(c)?;
                self.unify(&tc, &Type::nullary("bool"))?;
                let tt = self.infer(t)?;
                let tf = self.infer(f)?;
                self.unify(&tt, &tf)?;
                Ok(tt)
            }
            Expr::Match(scrut, arms) => {
                let ts = self.infer(scrut)?;
                let result = self.fresh();
                for arm in arms {
                    let (arg, res) = self.instantiate_ctor(&arm.ctor)?;
                    self.unify(&ts, &res)?;
                    let mut bound = Vec::new();
                    match (arg, arm.binders.len()) {
                        (None, 0) => {}
                        (None, _) => return Err(format!("constructor {} takes no argument", arm.ctor)),
                        (Some(_), 0) => return Err(format!("constructor {} expects an argument", arm.ctor)),
                        (Some(a), 1) => bound.push((arm.binders[0].clone(), a)),
                        (Some(a), n) => {
                            let parts: Vec<Type> = (0..n).map(|_| self.fresh()).collect();
                            self.unify(&a, &Type::Tuple(parts.clone()))?;
                            bound.extend(arm.binders.iter().cloned().zip(parts));
                        }
                    }
                    let depth = self.locals.len();
                    for (x, t) in bound {
                        if x != "_" {
                            self.locals.push((x, Binding::Mono(t)));
                        }
                    }
                    let tb = self.infer(&arm.body);
                    self.locals.truncate(depth);
                    self.unify(&result, &tb?)?;
                }
                Ok(result)
            }
            Expr::Lit(l) => Ok(Type::nullary(match l {
                Literal::Int(_) => "int",
                Literal::Float(_) => "float",
                Literal::Str(_) => "string",
                Literal::Bool(_) => "bool",
                Literal::Unit => "unit",
            })),
            Expr::Tuple(es) => Ok(Type::Tuple(es.iter().map(|e| self.infer(e)).collect::<R<_>>()?)),
            Expr::List(es) => {
                let elem = self.fresh();
                for e in es {
                    let t = self.infer(e)?;
                    self.unify(&elem, &t)?;
                }
                Ok(Type::con("list", vec![elem]))
            }
        }
    }

    fn infer_var(&mut self, name: &str, scale: Option<CostExpr>) -> R<Type> {
        let binding = self.lookup(name).cloned();
        match (binding, scale) {
            (Some(Binding::Op), s) => Ok(self.use_op(name, s.unwrap_or_else(CostExpr::one))),
            (_, Some(_)) => Err(format!("`{name}` is not an op; `@c` applies only to ops")),
            (Some(Binding::Poly(s)), None) => Ok(instantiate(&s, &mut self.st, false).0),
            (Some(Binding::Mono(t)), None) => Ok(t),
            (None, None) if self.ctors.contains_key(name) => {
                let (arg, res) = self.instantiate_ctor(name)?;
                Ok(match arg {
                    Some(a) => Type::arrow(a, res),
                    None => res,
                })
            }
            (None, None) => Err(format!("unbound variable `{name}`")),
        }
    }

    fn infer_binding(&mut self, name: &str, recursive: bool, annot: Option<&Type>, bound: &Expr) -> R<Binding> {
        let expected = annot.map(|t| self.annotation_type(t));
        let tb = if recursive {
            let a = expected.clone().unwrap_or_else(|| self.fresh());
            self.locals.push((name.to_string(), Binding::Mono(a.clone())));
            let tb = self.infer(bound);
            self.locals.pop();
            let tb = tb?;
            self.unify(&a, &tb)?;
            tb
        } else {
            self.infer(bound)?
        };
        if let Some(exp) = &expected {
            self.unify(exp, &tb)
                .map_err(|e| format!("`{name}` does not match its annotation: {e}"))?;
        }
        Ok(if bound.is_value() {
            Binding::Poly(self.generalize(&tb))
        } else {
            Binding::Mono(tb)
        })
    }

    fn check_fresh_name(&self, name: &str) -> R<()> {
        if self.ops.iter().any(|(n, _)| n == name) {
            return Err(format!("`{name}` is already declared as an op"));
        }
        Ok(())
    }

    pub fn decl(&mut self, idx: usize, d: &Decl) -> R<()> {
        self.sites.clear();
        let mut ty = None;
        match d {
            Decl::Type { .. } => {}
            Decl::Variant { name, params, ctors } => {
                let result = Type::Con(name.clone(), params.iter().map(|p| Type::rigid(p)).collect());
                for c in ctors {
                    self.ctors.insert(
                        c.name.clone(),
                        CtorInfo {
                            params: params.clone(),
                            arg: c.arg.clone(),
                            result: result.clone(),
                        },
                    );
                }
            }
            Decl::Repr(r) => {
                if self.reprs.iter().any(|x| x.name == r.name) {
                    return Err(format!("representation `{}` declared twice", r.name));
                }
                let pat = r.pattern.rigid_names();
                let mut count = HashMap::new();
                r.pattern.walk(&mut |t| {
                    if let Type::Rigid(n) = t {
                        *count.entry(n.clone()).or_insert(0) += 1;
                    }
                });
                if count.values().any(|c| *c > 1) {
                    return Err(format!("pattern of `{}` repeats a type variable", r.name));
                }
                if let Some(v) = r.target.rigid_names().into_iter().find(|v| !pat.contains(v)) {
                    return Err(format!("target of `{}` uses '{v} not bound by its pattern", r.name));
                }
                self.reprs.push(r.clone());
            }
            Decl::Op { name, scheme } => {
                self.check_fresh_name(name)?;
                if self.globals.contains_key(name) {
                    return Err(format!("op `{name}` shadows an existing definition"));
                }
                let body = assign_rvars(&scheme.body, &mut self.st);
                self.ops.push((name.clone(), TypeScheme::closed(body.clone())));
                self.globals.insert(name.clone(), Binding::Op);
                ty = Some(body);
            }
            Decl::Extern { name, scheme } => {
                self.check_fresh_name(name)?;
                let body = assign_rvars(&scheme.body, &mut self.st);
                self.globals.insert(name.clone(), Binding::Poly(TypeScheme::closed(body.clone())));
                ty = Some(body);
            }
            Decl::Impl(imp) => {
                if !self.ops.iter().any(|(n, _)| *n == imp.op) {
                    return Err(format!("implementation of undeclared op `{}`", imp.op));
                }
                let op = self.op_scheme(&imp.op).clone();
                let annot = imp.annot.as_ref().map(|t| assign_rvars(t, &mut self.st));
                let impl_ty = desugar_impl_annotation(annot.as_ref(), &op, &self.reprs, &mut self.st)
                    .map_err(|e| e.to_string())?;
                let expected = apply_assignments(&impl_ty, &self.reprs).map_err(|e| e.to_string())?;
                let depth = self.locals.len();
                let tb = self.infer(&imp.body);
                self.locals.truncate(depth);
                let tb = tb?;
                self.unify(&expected, &tb)
                    .map_err(|e| format!("body of `{}` implementation: {e}", imp.op))?;
                self.impls.push(ImplInfo {
                    decl: idx,
                    cost: imp.cost.clone(),
                    op: imp.op.clone(),
                    ty: impl_ty.clone(),
                    uses: std::mem::take(&mut self.sites),
                    body: imp.body.clone(),
                });
                ty = Some(impl_ty);
            }
            Decl::Let {
                name,
                recursive,
                annot,
                body,
            } => {
                self.check_fresh_name(name)?;
                let b = self.infer_binding(name, *recursive, annot.as_ref(), body)?;
                let t = match &b {
                    Binding::Poly(s) => s.body.clone(),
                    Binding::Mono(t) => t.clone(),
                    Binding::Op => unreachable!(),
                };
                self.globals.insert(name.clone(), b);
                ty = Some(t);
            }
        }
        self.decl_sites.push(std::mem::take(&mut self.sites));
        self.decl_types.push(ty);
        Ok(())
    }
}

/// Give every `repr` in a declaration or let-in annotation its own rvar.
fn assign_program_rvars(program: &Program, st: &mut InferStore) -> Program {
    fn expr(e: &Expr, st: &mut InferStore) -> Expr {
        let go = |e: &Expr, st: &mut InferStore| Box::new(expr(e, st));
        match e {
            Expr::Lambda(x, b) => Expr::Lambda(x.clone(), go(b, st)),
            Expr::App(a, b) => Expr::App(go(a, st), go(b, st)),
            Expr::LetIn {
                name,
                recursive,
                annot,
                bound,
                body,
            } => Expr::LetIn {
                name: name.clone(),
                recursive: *recursive,
                annot: annot.as_ref().map(|t| assign_rvars(t, st)),
                bound: go(bound, st),
                body: go(body, st),
            },
            Expr::If(c, t, f) => Expr::If(go(c, st), go(t, st), go(f, st)),
            Expr::Match(s, arms) => Expr::Match(
                go(s, st),
                arms.iter()
                    .map(|a| MatchArm {
                        body: expr(&a.body, st),
                        ..a.clone()
                    })
                    .collect(),
            ),
            Expr::Tuple(es) => Expr::Tuple(es.iter().map(|e| expr(e, st)).collect()),
            Expr::List(es) => Expr::List(es.iter().map(|e| expr(e, st)).collect()),
            Expr::Scaled(c, i) => Expr::Scaled(c.clone(), go(i, st)),
            e => e.clone(),
        }
    }
    let mut out = program.clone();
    for d in &mut out.decls {
        match d {
            Decl::Op { scheme, .. } | Decl::Extern { scheme, .. } => scheme.body = assign_rvars(&scheme.body, st),
            Decl::Impl(imp) => {
                imp.annot = imp.annot.as_ref().map(|t| assign_rvars(t, st));
                imp.body = expr(&imp.body, st);
            }
            Decl::Let { annot, body, .. } => {
                *annot = annot.as_ref().map(|t| assign_rvars(t, st));
                *body = expr(body, st);
            }
            Decl::Variant { ctors, .. } => {
                for c in ctors {
                    c.arg = c.arg.as_ref().map(|t| assign_rvars(t, st));
                }
            }
            Decl::Type { .. } | Decl::Repr(_) => {}
        }
    }
    out
}

pub(super) fn run(program: &Program) -> Result<(Engine, Program), TypeError> {
    let mut eng = Engine::new();
    let program = &assign_program_rvars(program, &mut eng.st);
    for (i, d) in program.decls.iter().enumerate() {
        eng.decl(i, d).map_err(|msg| TypeError {
            pos: program.pos(i),
            decl: i,
            msg,
        })?;
    }
    Ok((eng, program.clone()))
}

#[allow(dead_code)]
pub(super) fn debug_type(eng: &Engine, t: &Type) -> String {
    show(&zonk(&eng.st, t))
}
