//! Abstract syntax for RepML programs, types and cost expressions.

use std::collections::BTreeSet;
use std::fmt;

/// A unification variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UVar(pub u32);

/// A representation variable attached to a `repr` type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RVar(pub u32);

impl fmt::Display for RVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Con(String, Vec<Type>),
    Arrow(Box<Type>, Box<Type>),
    Tuple(Vec<Type>),
    Rigid(String),
    Var(UVar),
    /// `T repr`; the representation variable is unset until annotation
    /// variables are assigned.
    Repr(Box<Type>, Option<RVar>),
    /// `!r T`: the inner (repr) type uses representation `r`.
    Assign(String, Box<Type>),
    Wildcard,
}

impl Type {
    pub fn con(name: &str, args: Vec<Type>) -> Type {
        Type::Con(name.to_string(), args)
    }

    pub fn nullary(name: &str) -> Type {
        Type::Con(name.to_string(), Vec::new())
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn rigid(name: &str) -> Type {
        Type::Rigid(name.to_string())
    }

    pub fn repr(arg: Type, rvar: Option<RVar>) -> Type {
        Type::Repr(Box::new(arg), rvar)
    }

    /// Build `a1 -> a2 -> ... -> ret`.
    pub fn arrows(args: Vec<Type>, ret: Type) -> Type {
        args.into_iter().rev().fold(ret, |acc, a| Type::arrow(a, acc))
    }

    pub fn children(&self) -> Vec<&Type> {
        match self {
            Type::Con(_, args) | Type::Tuple(args) => args.iter().collect(),
            Type::Arrow(a, b) => vec![a, b],
            Type::Repr(a, _) | Type::Assign(_, a) => vec![a],
            Type::Rigid(_) | Type::Var(_) | Type::Wildcard => Vec::new(),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Type)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Bottom-up rewrite.
    pub fn map(&self, f: &mut impl FnMut(Type) -> Type) -> Type {
        let rebuilt = match self {
            Type::Con(n, args) => Type::Con(n.clone(), args.iter().map(|a| a.map(f)).collect()),
            Type::Tuple(args) => Type::Tuple(args.iter().map(|a| a.map(f)).collect()),
            Type::Arrow(a, b) => Type::Arrow(Box::new(a.map(f)), Box::new(b.map(f))),
            Type::Repr(a, r) => Type::Repr(Box::new(a.map(f)), *r),
            Type::Assign(n, a) => Type::Assign(n.clone(), Box::new(a.map(f))),
            t => t.clone(),
        };
        f(rebuilt)
    }

    pub fn contains_repr(&self) -> bool {
        let mut found = false;
        self.walk(&mut |t| found |= matches!(t, Type::Repr(..) | Type::Assign(..)));
        found
    }

    pub fn contains_wildcard(&self) -> bool {
        let mut found = false;
        self.walk(&mut |t| found |= matches!(t, Type::Wildcard));
        found
    }

    pub fn uvars(&self) -> BTreeSet<UVar> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Type::Var(v) = t {
                out.insert(*v);
            }
        });
        out
    }

    pub fn rvars(&self) -> BTreeSet<RVar> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Type::Repr(_, Some(r)) = t {
                out.insert(*r);
            }
        });
        out
    }

    /// Rigid variable names in first-occurrence order.
    pub fn rigid_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |t| {
            if let Type::Rigid(n) = t {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    /// Replace every `!r T` by `T`.
    pub fn strip_assignments(&self) -> Type {
        self.map(&mut |t| match t {
            Type::Assign(_, inner) => *inner,
            t => t,
        })
    }

    pub fn clear_rvars(&self) -> Type {
        self.map(&mut |t| match t {
            Type::Repr(a, _) => Type::Repr(a, None),
            t => t,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostExpr {
    Lit(f64),
    Var(String),
    Bin(CostOp, Box<CostExpr>, Box<CostExpr>),
    Log(Box<CostExpr>),
}

impl CostExpr {
    pub fn one() -> CostExpr {
        CostExpr::Lit(1.0)
    }

    pub fn bin(op: CostOp, a: CostExpr, b: CostExpr) -> CostExpr {
        CostExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            CostExpr::Lit(_) => {}
            CostExpr::Var(v) => {
                out.insert(v.clone());
            }
            CostExpr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            CostExpr::Log(a) => a.collect_vars(out),
        }
    }

    /// `k * self`.
    pub fn scaled(&self, k: f64) -> CostExpr {
        CostExpr::bin(CostOp::Mul, CostExpr::Lit(k), self.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchArm {
    pub ctor: String,
    pub binders: Vec<String>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Lambda(String, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    LetIn {
        name: String,
        recursive: bool,
        annot: Option<Type>,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Match(Box<Expr>, Vec<MatchArm>),
    Lit(Literal),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Scaled(CostExpr, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Expr, args: Vec<Expr>) -> Expr {
        args.into_iter().fold(f, Expr::app)
    }

    pub fn lambda(params: &[&str], body: Expr) -> Expr {
        params
            .iter()
            .rev()
            .fold(body, |acc, p| Expr::Lambda(p.to_string(), Box::new(acc)))
    }

    /// Syntactic values for the value restriction and let lifting.
    pub fn is_value(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Lambda(..) | Expr::Lit(_) => true,
            Expr::Tuple(es) | Expr::List(es) => es.iter().all(Expr::is_value),
            _ => false,
        }
    }

    /// Visit sub-expressions in evaluation order (the same order inference
    /// uses to number op-use sites).
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Var(_) | Expr::Lit(_) => {}
            Expr::Lambda(_, b) => b.walk(f),
            Expr::App(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::LetIn { bound, body, .. } => {
                bound.walk(f);
                body.walk(f);
            }
            Expr::If(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
            Expr::Match(s, arms) => {
                s.walk(f);
                for arm in arms {
                    arm.body.walk(f);
                }
            }
            Expr::Tuple(es) | Expr::List(es) => {
                for e in es {
                    e.walk(f);
                }
            }
            Expr::Scaled(_, inner) => inner.walk(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeScheme {
    pub quantified: Vec<String>,
    pub body: Type,
}

impl TypeScheme {
    /// Quantify over every rigid variable of `body`.
    pub fn closed(body: Type) -> TypeScheme {
        TypeScheme {
            quantified: body.rigid_names(),
            body,
        }
    }

    pub fn mono(body: Type) -> TypeScheme {
        TypeScheme {
            quantified: Vec::new(),
            body,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorDecl {
    pub name: String,
    pub arg: Option<Type>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReprDecl {
    pub name: String,
    pub pattern: Type,
    pub target: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplDecl {
    pub cost: CostExpr,
    pub op: String,
    pub annot: Option<Type>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Type {
        name: String,
        params: Vec<String>,
        alias: Option<Type>,
    },
    Variant {
        name: String,
        params: Vec<String>,
        ctors: Vec<CtorDecl>,
    },
    Repr(ReprDecl),
    Op {
        name: String,
        scheme: TypeScheme,
    },
    Impl(ImplDecl),
    Let {
        name: String,
        recursive: bool,
        annot: Option<Type>,
        body: Expr,
    },
    Extern {
        name: String,
        scheme: TypeScheme,
    },
}

impl Decl {
    pub fn keyword(&self) -> &'static str {
        match self {
            Decl::Type { .. } | Decl::Variant { .. } => "type",
            Decl::Repr(_) => "letrepr",
            Decl::Op { .. } => "letop",
            Decl::Impl(_) => "letimpl",
            Decl::Let { .. } => "let",
            Decl::Extern { .. } => "external",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A parsed program. Positions are kept beside the declarations so that
/// structural equality ignores them.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub positions: Vec<Pos>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.decls == other.decls
    }
}

impl Program {
    pub fn new(decls: Vec<Decl>) -> Program {
        let positions = vec![Pos::default(); decls.len()];
        Program { decls, positions }
    }

    pub fn pos(&self, idx: usize) -> Pos {
        self.positions.get(idx).copied().unwrap_or_default()
    }

    pub fn push(&mut self, decl: Decl, pos: Pos) {
        self.decls.push(decl);
        self.positions.push(pos);
    }
}
