//! Printing RepML back to source text. `parse_program(print_program(p))`
//! reproduces `p`.

use super::ast::*;

#[derive(Debug, Clone, Copy, Default)]
pub struct TypePrinter {
    /// Show representation variables as `repr#N`.
    pub show_rvars: bool,
}

const ARROW: u8 = 0;
const TUPLE: u8 = 1;
const ASSIGN: u8 = 2;
const APP: u8 = 3;
const ATOM: u8 = 4;

impl TypePrinter {
    pub fn with_rvars() -> TypePrinter {
        TypePrinter { show_rvars: true }
    }

    pub fn print(&self, t: &Type) -> String {
        let mut s = String::new();
        self.go(t, ARROW, &mut s);
        s
    }

    fn level(t: &Type) -> u8 {
        match t {
            Type::Arrow(..) => ARROW,
            Type::Tuple(items) if items.len() != 1 => TUPLE,
            Type::Assign(..) => ASSIGN,
            Type::Con(_, args) if !args.is_empty() => APP,
            Type::Repr(..) => APP,
            _ => ATOM,
        }
    }

    fn go(&self, t: &Type, min: u8, out: &mut String) {
        if Self::level(t) < min {
            out.push('(');
            self.go(t, ARROW, out);
            out.push(')');
            return;
        }
        match t {
            Type::Arrow(a, b) => {
                self.go(a, TUPLE, out);
                out.push_str(" -> ");
                self.go(b, ARROW, out);
            }
            Type::Tuple(items) => {
                if items.is_empty() {
                    out.push_str("unit");
                }
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" * ");
                    }
                    self.go(it, ASSIGN, out);
                }
            }
            Type::Con(name, args) => {
                self.postfix_args(args, out);
                out.push_str(name);
            }
            Type::Repr(arg, r) => {
                self.postfix_args(std::slice::from_ref(arg), out);
                out.push_str("repr");
                if let (true, Some(r)) = (self.show_rvars, r) {
                    out.push_str(&format!("#{}", r.0));
                }
            }
            Type::Assign(name, inner) => {
                out.push('!');
                out.push_str(name);
                if !matches!(**inner, Type::Wildcard) {
                    out.push(' ');
                    self.go(inner, ATOM, out);
                }
            }
            Type::Rigid(n) => {
                out.push('\'');
                out.push_str(n);
            }
            Type::Var(u) => out.push_str(&format!("'_u{}", u.0)),
            Type::Wildcard => out.push('_'),
        }
    }

    fn postfix_args(&self, args: &[Type], out: &mut String) {
        match args {
            [] => {}
            [a] => {
                self.go(a, APP, out);
                out.push(' ');
            }
            many => {
                out.push('(');
                for (i, a) in many.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.go(a, ARROW, out);
                }
                out.push_str(") ");
            }
        }
    }
}

pub fn print_type(t: &Type) -> String {
    TypePrinter::default().print(t)
}

// ---- costs ----

fn cost_level(c: &CostExpr) -> u8 {
    match c {
        CostExpr::Bin(CostOp::Add | CostOp::Sub, ..) => 0,
        CostExpr::Bin(CostOp::Mul | CostOp::Div, ..) => 1,
        CostExpr::Bin(CostOp::Min | CostOp::Max, ..) | CostExpr::Log(_) => 2,
        CostExpr::Lit(_) | CostExpr::Var(_) => 3,
    }
}

fn print_cost_at(c: &CostExpr, min: u8, out: &mut String) {
    if cost_level(c) < min {
        out.push('(');
        print_cost_at(c, 0, out);
        out.push(')');
        return;
    }
    match c {
        CostExpr::Lit(v) => out.push_str(&format_float(*v)),
        CostExpr::Var(v) => out.push_str(v),
        CostExpr::Log(a) => {
            out.push_str("log ");
            print_cost_at(a, 3, out);
        }
        CostExpr::Bin(op, a, b) => match op {
            CostOp::Min | CostOp::Max => {
                out.push_str(if *op == CostOp::Min { "min " } else { "max " });
                print_cost_at(a, 3, out);
                out.push(' ');
                print_cost_at(b, 3, out);
            }
            _ => {
                let (lvl, sym) = match op {
                    CostOp::Add => (0, " + "),
                    CostOp::Sub => (0, " - "),
                    CostOp::Mul => (1, " * "),
                    _ => (1, " / "),
                };
                print_cost_at(a, lvl, out);
                out.push_str(sym);
                print_cost_at(b, lvl + 1, out);
            }
        },
    }
}

pub fn print_cost(c: &CostExpr) -> String {
    let mut s = String::new();
    print_cost_at(c, 0, &mut s);
    s
}

fn print_cost_atom(c: &CostExpr) -> String {
    let mut s = String::new();
    print_cost_at(c, 3, &mut s);
    s
}

/// Shortest round-tripping float text that still lexes as a float.
pub fn format_float(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

// ---- expressions ----

const E_OPEN: u8 = 0;
const E_APP: u8 = 6;
const E_ATOM: u8 = 7;

fn binop_info(op: &str) -> Option<(u8, bool)> {
    // (level, right associative)
    Some(match op {
        "||" => (1, true),
        "&&" => (2, true),
        "=" | "<>" | "<" | ">" | "<=" | ">=" => (3, false),
        "+" | "-" | "^" => (4, false),
        "*" | "/" => (5, false),
        _ => return None,
    })
}

fn as_binop(e: &Expr) -> Option<(&str, &Expr, &Expr)> {
    if let Expr::App(f, b) = e {
        if let Expr::App(op, a) = &**f {
            if let Expr::Var(name) = &**op {
                if binop_info(name).is_some() {
                    return Some((name.as_str(), a, b));
                }
            }
        }
    }
    None
}

fn expr_level(e: &Expr) -> u8 {
    if let Some((op, _, _)) = as_binop(e) {
        return binop_info(op).unwrap().0;
    }
    match e {
        Expr::Lambda(..) | Expr::LetIn { .. } | Expr::If(..) => E_OPEN,
        Expr::App(..) => E_APP,
        Expr::Lit(Literal::Int(i)) if *i < 0 => E_APP,
        Expr::Lit(Literal::Float(f)) if *f < 0.0 => E_APP,
        _ => E_ATOM,
    }
}

struct ExprPrinter<'a> {
    types: TypePrinter,
    out: &'a mut String,
}

impl ExprPrinter<'_> {
    fn go(&mut self, e: &Expr, min: u8) {
        if expr_level(e) < min {
            self.out.push('(');
            self.go(e, E_OPEN);
            self.out.push(')');
            return;
        }
        if let Some((op, a, b)) = as_binop(e) {
            let (lvl, right) = binop_info(op).unwrap();
            let (la, lb) = if right { (lvl + 1, lvl) } else { (lvl, lvl + 1) };
            self.go(a, la);
            self.out.push(' ');
            self.out.push_str(op);
            self.out.push(' ');
            self.go(b, lb);
            return;
        }
        match e {
            Expr::Var(v) => {
                if binop_info(v).is_some() {
                    self.out.push('(');
                    self.out.push_str(v);
                    self.out.push(')');
                } else {
                    self.out.push_str(v);
                }
            }
            Expr::Lambda(..) => {
                let (params, body) = collect_lambdas(e);
                self.out.push_str("fun ");
                self.out.push_str(&params.join(" "));
                self.out.push_str(" -> ");
                self.go(body, E_OPEN);
            }
            Expr::App(f, a) => {
                self.go(f, E_APP);
                self.out.push(' ');
                self.go(a, E_ATOM);
            }
            Expr::LetIn {
                name,
                recursive,
                annot,
                bound,
                body,
            } => {
                self.binding(name, *recursive, annot.as_ref(), bound);
                self.out.push_str(" in ");
                self.go(body, E_OPEN);
            }
            Expr::If(c, t, f) => {
                self.out.push_str("if ");
                self.go(c, E_OPEN);
                self.out.push_str(" then ");
                self.go(t, E_OPEN);
                self.out.push_str(" else ");
                self.go(f, E_OPEN);
            }
            Expr::Match(s, arms) => {
                self.out.push_str("begin match ");
                self.go(s, E_OPEN);
                self.out.push_str(" with");
                for arm in arms {
                    self.out.push_str(" | ");
                    self.out.push_str(&arm.ctor);
                    match arm.binders.len() {
                        0 => {}
                        1 => {
                            self.out.push(' ');
                            self.out.push_str(&arm.binders[0]);
                        }
                        _ => {
                            self.out.push_str(" (");
                            self.out.push_str(&arm.binders.join(", "));
                            self.out.push(')');
                        }
                    }
                    self.out.push_str(" -> ");
                    self.go(&arm.body, E_OPEN);
                }
                self.out.push_str(" end");
            }
            Expr::Lit(l) => self.out.push_str(&print_literal(l)),
            Expr::Tuple(items) => {
                self.out.push('(');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.go(it, E_OPEN);
                }
                self.out.push(')');
            }
            Expr::List(items) => {
                self.out.push('[');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str("; ");
                    }
                    self.go(it, E_OPEN);
                }
                self.out.push(']');
            }
            Expr::Scaled(c, inner) => {
                self.out.push('@');
                self.out.push_str(&print_cost_atom(c));
                self.out.push(' ');
                self.go(inner, E_ATOM);
            }
        }
    }

    /// `let rec? name params = bound`, re-sugaring unannotated lambdas.
    fn binding(&mut self, name: &str, recursive: bool, annot: Option<&Type>, bound: &Expr) {
        self.out.push_str("let ");
        if recursive {
            self.out.push_str("rec ");
        }
        self.out.push_str(name);
        match annot {
            Some(t) => {
                self.out.push_str(" : ");
                self.out.push_str(&self.types.print(t));
                self.out.push_str(" = ");
                self.go(bound, E_OPEN);
            }
            None => {
                let (params, body) = collect_lambdas(bound);
                for p in &params {
                    self.out.push(' ');
                    self.out.push_str(p);
                }
                self.out.push_str(" = ");
                self.go(body, E_OPEN);
            }
        }
    }
}

fn collect_lambdas(e: &Expr) -> (Vec<&str>, &Expr) {
    let mut params = Vec::new();
    let mut cur = e;
    while let Expr::Lambda(p, b) = cur {
        params.push(p.as_str());
        cur = b;
    }
    (params, cur)
}

fn print_literal(l: &Literal) -> String {
    match l {
        Literal::Int(i) if *i < 0 => format!("(-{})", i.unsigned_abs()),
        Literal::Int(i) => i.to_string(),
        Literal::Float(f) if *f < 0.0 => format!("(-{})", format_float(-f)),
        Literal::Float(f) => format_float(*f),
        Literal::Str(s) => {
            let mut out = String::from("\"");
            for ch in s.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
        Literal::Bool(b) => b.to_string(),
        Literal::Unit => "()".to_string(),
    }
}

pub fn print_expr(e: &Expr) -> String {
    print_expr_with(e, TypePrinter::default())
}

pub fn print_expr_with(e: &Expr, types: TypePrinter) -> String {
    let mut s = String::new();
    ExprPrinter { types, out: &mut s }.go(e, E_OPEN);
    s
}

fn type_params(params: &[String]) -> String {
    match params {
        [] => String::new(),
        [p] => format!("'{p} "),
        many => format!(
            "({}) ",
            many.iter().map(|p| format!("'{p}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

pub fn print_decl(d: &Decl) -> String {
    print_decl_with(d, TypePrinter::default())
}

pub fn print_decl_with(d: &Decl, tp: TypePrinter) -> String {
    match d {
        Decl::Type {
            name,
            params,
            alias,
        } => match alias {
            None => format!("type {}{name}", type_params(params)),
            Some(t) => format!("type {}{name} = {}", type_params(params), tp.print(t)),
        },
        Decl::Variant {
            name,
            params,
            ctors,
        } => {
            let cs: Vec<String> = ctors
                .iter()
                .map(|c| match &c.arg {
                    None => c.name.clone(),
                    Some(t) => format!("{} of {}", c.name, tp.print(t)),
                })
                .collect();
            format!("type {}{name} = {}", type_params(params), cs.join(" | "))
        }
        Decl::Repr(r) => format!(
            "letrepr {} {{{} = {}}}",
            r.name,
            tp.print(&r.pattern),
            tp.print(&r.target)
        ),
        Decl::Op { name, scheme } => format!("letop {name} : {}", tp.print(&scheme.body)),
        Decl::Impl(imp) => {
            let mut s = format!("letimpl[{}] {}", print_cost(&imp.cost), imp.op);
            if let Some(t) = &imp.annot {
                s.push_str(" : ");
                s.push_str(&tp.print(t));
            }
            s.push_str(" = ");
            s.push_str(&print_expr_with(&imp.body, tp));
            s
        }
        Decl::Let {
            name,
            recursive,
            annot,
            body,
        } => {
            let mut s = String::new();
            ExprPrinter {
                types: tp,
                out: &mut s,
            }
            .binding(name, *recursive, annot.as_ref(), body);
            s
        }
        Decl::Extern { name, scheme } => format!("external {name} : {}", tp.print(&scheme.body)),
    }
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.decls {
        out.push_str(&print_decl(d));
        out.push('\n');
    }
    out
}
