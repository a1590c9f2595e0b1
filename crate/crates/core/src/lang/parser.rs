//! Recursive-descent parser for RepML.

use super::ast::*;
use super::error::ParseError;
use super::lexer::{tokenize, Tok, Token};

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let mut prog = Program::default();
    loop {
        while p.eat_sym(";;") {}
        if p.at_eof() {
            break;
        }
        let pos = p.pos();
        let decl = p.decl()?;
        prog.push(decl, pos);
    }
    Ok(prog)
}

/// Parse a standalone type (used by tests and the web demo).
pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_cost(src: &str) -> Result<CostExpr, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.cost()?;
    p.expect_eof()?;
    Ok(c)
}

const BINOPS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["=", "<>", "<", ">", "<=", ">="],
    &["+", "-", "^"],
    &["*", "/"],
];

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.pos(), msg))
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) | Tok::Ctor(s) => format!("`{s}`"),
            Tok::TyVar(s) => format!("`'{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Float(f) => format!("`{f}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Kw(k) | Tok::Sym(k) => format!("`{k}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        self.err(format!("expected {wanted}, found {}", Self::describe(self.peek())))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("identifier"),
        }
    }

    /// An identifier or `_`, as allowed for binders.
    fn binder(&mut self) -> Result<String, ParseError> {
        if self.eat_sym("_") {
            return Ok("_".to_string());
        }
        self.ident()
    }

    // ---- declarations ----

    fn decl(&mut self) -> Result<Decl, ParseError> {
        match self.peek().clone() {
            Tok::Kw("type") => {
                self.bump();
                self.type_decl()
            }
            Tok::Kw("letrepr") => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym("{")?;
                let pattern = self.ty()?;
                self.expect_sym("=")?;
                let target = self.ty()?;
                self.expect_sym("}")?;
                Ok(Decl::Repr(ReprDecl {
                    name,
                    pattern,
                    target,
                }))
            }
            Tok::Kw("letop") => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym(":")?;
                let body = self.ty()?;
                Ok(Decl::Op {
                    name,
                    scheme: TypeScheme::closed(body),
                })
            }
            Tok::Kw("letimpl") => {
                self.bump();
                self.expect_sym("[")?;
                let cost = self.cost()?;
                self.expect_sym("]")?;
                let op = self.ident()?;
                let annot = if self.eat_sym(":") { Some(self.ty()?) } else { None };
                self.expect_sym("=")?;
                let body = self.expr()?;
                Ok(Decl::Impl(ImplDecl {
                    cost,
                    op,
                    annot,
                    body,
                }))
            }
            Tok::Kw("let") => {
                self.bump();
                let (name, recursive, annot, body) = self.let_binding()?;
                Ok(Decl::Let {
                    name,
                    recursive,
                    annot,
                    body,
                })
            }
            Tok::Kw("external") => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym(":")?;
                let body = self.ty()?;
                Ok(Decl::Extern {
                    name,
                    scheme: TypeScheme::closed(body),
                })
            }
            Tok::Ident(s) if s.starts_with("let") || s.starts_with("type") => {
                self.err(format!("unknown keyword `{s}`"))
            }
            _ => self.unexpected("a declaration"),
        }
    }

    fn type_params(&mut self) -> Result<Vec<String>, ParseError> {
        match self.peek().clone() {
            Tok::TyVar(v) => {
                self.bump();
                Ok(vec![v])
            }
            Tok::Sym("(") if matches!(self.peek_at(1), Tok::TyVar(_)) => {
                self.bump();
                let mut out = Vec::new();
                loop {
                    match self.bump() {
                        Tok::TyVar(v) => out.push(v),
                        _ => return self.unexpected("type parameter"),
                    }
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(")")?;
                Ok(out)
            }
            _ => Ok(Vec::new()),
        }
    }

    fn type_decl(&mut self) -> Result<Decl, ParseError> {
        let params = self.type_params()?;
        let name = self.ident()?;
        if !self.eat_sym("=") {
            return Ok(Decl::Type {
                name,
                params,
                alias: None,
            });
        }
        let is_variant = match self.peek() {
            Tok::Sym("|") => true,
            Tok::Ctor(c) => !c.contains('.'),
            _ => false,
        };
        if !is_variant {
            let alias = self.ty()?;
            return Ok(Decl::Type {
                name,
                params,
                alias: Some(alias),
            });
        }
        self.eat_sym("|");
        let mut ctors = Vec::new();
        loop {
            let cname = match self.bump() {
                Tok::Ctor(c) => c,
                _ => return self.unexpected("constructor name"),
            };
            let arg = if self.eat_kw("of") { Some(self.ty()?) } else { None };
            ctors.push(CtorDecl { name: cname, arg });
            if !self.eat_sym("|") {
                break;
            }
        }
        Ok(Decl::Variant {
            name,
            params,
            ctors,
        })
    }

    /// `rec? name params* (: type)? = expr`, shared by top-level and local lets.
    fn let_binding(&mut self) -> Result<(String, bool, Option<Type>, Expr), ParseError> {
        let recursive = self.eat_kw("rec");
        let name = self.binder()?;
        let mut params = Vec::new();
        while matches!(self.peek(), Tok::Ident(_) | Tok::Sym("_")) {
            params.push(self.binder()?);
        }
        let annot = if self.eat_sym(":") { Some(self.ty()?) } else { None };
        if annot.is_some() && !params.is_empty() {
            return self.err("type annotations are only supported on bindings without parameters");
        }
        self.expect_sym("=")?;
        let body = self.expr()?;
        let body = params
            .into_iter()
            .rev()
            .fold(body, |acc, p| Expr::Lambda(p, Box::new(acc)));
        Ok((name, recursive, annot, body))
    }

    // ---- types ----

    pub fn ty(&mut self) -> Result<Type, ParseError> {
        let lhs = self.tuple_ty()?;
        if self.eat_sym("->") {
            let rhs = self.ty()?;
            return Ok(Type::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn tuple_ty(&mut self) -> Result<Type, ParseError> {
        let first = self.app_ty()?;
        if !self.is_sym("*") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_sym("*") {
            items.push(self.app_ty()?);
        }
        Ok(Type::Tuple(items))
    }

    fn starts_type_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::TyVar(_) | Tok::Ident(_) | Tok::Sym("_") | Tok::Sym("(") | Tok::Sym("!")
        )
    }

    fn app_ty(&mut self) -> Result<Type, ParseError> {
        if self.eat_sym("!") {
            let r = self.ident()?;
            if self.starts_type_atom() {
                let inner = self.app_ty()?;
                return Ok(Type::Assign(r, Box::new(inner)));
            }
            return Ok(Type::Assign(r, Box::new(Type::Wildcard)));
        }
        let mut args = self.atom_ty()?;
        while let Tok::Ident(name) = self.peek().clone() {
            self.bump();
            let t = make_con(&name, args).map_err(|m| ParseError::new(self.pos(), m))?;
            args = vec![t];
        }
        if args.len() != 1 {
            return self.err("parenthesized type list must be followed by a type constructor");
        }
        Ok(args.pop().unwrap())
    }

    /// Returns one type, or several for `(t1, t2) name`.
    fn atom_ty(&mut self) -> Result<Vec<Type>, ParseError> {
        match self.peek().clone() {
            Tok::TyVar(v) => {
                self.bump();
                Ok(vec![Type::Rigid(v)])
            }
            Tok::Sym("_") => {
                self.bump();
                Ok(vec![Type::Wildcard])
            }
            Tok::Ident(name) => {
                self.bump();
                let t = make_con(&name, Vec::new()).map_err(|m| ParseError::new(self.pos(), m))?;
                Ok(vec![t])
            }
            Tok::Sym("(") => {
                self.bump();
                let mut items = vec![self.ty()?];
                while self.eat_sym(",") {
                    items.push(self.ty()?);
                }
                self.expect_sym(")")?;
                Ok(items)
            }
            _ => self.unexpected("a type"),
        }
    }

    // ---- cost expressions ----

    fn cost(&mut self) -> Result<CostExpr, ParseError> {
        let mut lhs = self.cost_term()?;
        loop {
            let op = if self.eat_sym("+") {
                CostOp::Add
            } else if self.eat_sym("-") {
                CostOp::Sub
            } else {
                break;
            };
            let rhs = self.cost_term()?;
            lhs = CostExpr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cost_term(&mut self) -> Result<CostExpr, ParseError> {
        let mut lhs = self.cost_factor()?;
        loop {
            let op = if self.eat_sym("*") {
                CostOp::Mul
            } else if self.eat_sym("/") {
                CostOp::Div
            } else {
                break;
            };
            let rhs = self.cost_factor()?;
            lhs = CostExpr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cost_factor(&mut self) -> Result<CostExpr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(f) if f == "min" || f == "max" => {
                self.bump();
                let a = self.cost_atom()?;
                let b = self.cost_atom()?;
                let op = if f == "min" { CostOp::Min } else { CostOp::Max };
                Ok(CostExpr::bin(op, a, b))
            }
            Tok::Ident(f) if f == "log" => {
                self.bump();
                Ok(CostExpr::Log(Box::new(self.cost_atom()?)))
            }
            _ => self.cost_atom(),
        }
    }

    fn cost_atom(&mut self) -> Result<CostExpr, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(CostExpr::Lit(i as f64))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(CostExpr::Lit(f))
            }
            Tok::Ident(v) | Tok::Ctor(v) if !matches!(v.as_str(), "min" | "max" | "log") => {
                self.bump();
                Ok(CostExpr::Var(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let c = self.cost()?;
                self.expect_sym(")")?;
                Ok(c)
            }
            _ => self.unexpected("a cost expression"),
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Kw("fun") => {
                self.bump();
                let mut params = vec![self.binder()?];
                while !self.is_sym("->") {
                    params.push(self.binder()?);
                }
                self.expect_sym("->")?;
                let body = self.expr()?;
                Ok(params
                    .into_iter()
                    .rev()
                    .fold(body, |acc, p| Expr::Lambda(p, Box::new(acc))))
            }
            Tok::Kw("let") => {
                self.bump();
                let (name, recursive, annot, bound) = self.let_binding()?;
                self.expect_kw("in")?;
                let body = self.expr()?;
                Ok(Expr::LetIn {
                    name,
                    recursive,
                    annot,
                    bound: Box::new(bound),
                    body: Box::new(body),
                })
            }
            Tok::Kw("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect_kw("then")?;
                let t = self.expr()?;
                self.expect_kw("else")?;
                let e = self.expr()?;
                Ok(Expr::If(Box::new(c), Box::new(t), Box::new(e)))
            }
            Tok::Kw("match") => {
                self.bump();
                self.match_rest()
            }
            _ => self.binop(0),
        }
    }

    fn match_rest(&mut self) -> Result<Expr, ParseError> {
        let scrut = self.expr()?;
        self.expect_kw("with")?;
        self.eat_sym("|");
        let mut arms = Vec::new();
        loop {
            let ctor = match self.bump() {
                Tok::Ctor(c) => c,
                _ => return self.unexpected("constructor pattern"),
            };
            let binders = match self.peek() {
                Tok::Ident(_) | Tok::Sym("_") => vec![self.binder()?],
                Tok::Sym("(") => {
                    self.bump();
                    let mut bs = vec![self.binder()?];
                    while self.eat_sym(",") {
                        bs.push(self.binder()?);
                    }
                    self.expect_sym(")")?;
                    bs
                }
                _ => Vec::new(),
            };
            self.expect_sym("->")?;
            let body = self.expr()?;
            arms.push(MatchArm {
                ctor,
                binders,
                body,
            });
            if !self.eat_sym("|") {
                break;
            }
        }
        Ok(Expr::Match(Box::new(scrut), arms))
    }

    fn binop(&mut self, level: usize) -> Result<Expr, ParseError> {
        if level == BINOPS.len() {
            return self.app();
        }
        let right_assoc = level < 2;
        let lhs = self.binop(level + 1)?;
        let op = match self.peek() {
            Tok::Sym(s) if BINOPS[level].contains(s) => *s,
            _ => return Ok(lhs),
        };
        if right_assoc {
            self.bump();
            let rhs = self.binop(level)?;
            return Ok(Expr::apps(Expr::var(op), vec![lhs, rhs]));
        }
        let mut acc = lhs;
        loop {
            let op = match self.peek() {
                Tok::Sym(s) if BINOPS[level].contains(s) => *s,
                _ => break,
            };
            self.bump();
            let rhs = self.binop(level + 1)?;
            acc = Expr::apps(Expr::var(op), vec![acc, rhs]);
        }
        let _ = op;
        Ok(acc)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::Ctor(_)
                | Tok::Int(_)
                | Tok::Float(_)
                | Tok::Str(_)
                | Tok::Kw("true")
                | Tok::Kw("false")
                | Tok::Kw("begin")
                | Tok::Sym("(")
                | Tok::Sym("[")
                | Tok::Sym("@")
        )
    }

    fn app(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Tok::Kw("fun" | "let" | "if" | "match")) {
            return self.expr();
        }
        if self.is_sym("-") {
            self.bump();
            return match self.bump() {
                Tok::Int(i) => Ok(Expr::Lit(Literal::Int(-i))),
                Tok::Float(f) => Ok(Expr::Lit(Literal::Float(-f))),
                _ => self.err("unary minus is only supported on numeric literals"),
            };
        }
        let mut f = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            f = Expr::app(f, a);
        }
        // A trailing `fun`/`match` argument, as in `f x (fun ...)` without parens.
        if matches!(self.peek(), Tok::Kw("fun" | "match")) {
            let a = self.expr()?;
            f = Expr::app(f, a);
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(v) | Tok::Ctor(v) => {
                self.bump();
                Ok(Expr::Var(v))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(i)))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Expr::Lit(Literal::Float(f)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(Expr::Lit(Literal::Bool(true)))
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(Expr::Lit(Literal::Bool(false)))
            }
            Tok::Kw("begin") => {
                self.bump();
                let e = self.expr()?;
                self.expect_kw("end")?;
                Ok(e)
            }
            Tok::Sym("@") => {
                self.bump();
                let c = self.cost_atom()?;
                let inner = self.atom()?;
                Ok(Expr::Scaled(c, Box::new(inner)))
            }
            Tok::Sym("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.is_sym("]") {
                    items.push(self.expr()?);
                    while self.eat_sym(";") {
                        if self.is_sym("]") {
                            break;
                        }
                        items.push(self.expr()?);
                    }
                }
                self.expect_sym("]")?;
                Ok(Expr::List(items))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(Expr::Lit(Literal::Unit));
                }
                if let Tok::Sym(s) = self.peek().clone() {
                    if BINOPS.iter().any(|l| l.contains(&s)) && matches!(self.peek_at(1), Tok::Sym(")")) {
                        self.bump();
                        self.bump();
                        return Ok(Expr::var(s));
                    }
                }
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                Ok(Expr::Tuple(items))
            }
            _ => self.unexpected("an expression"),
        }
    }
}

/// Build a type constructor application, treating the builtin `repr` specially.
fn make_con(name: &str, args: Vec<Type>) -> Result<Type, String> {
    if name == "repr" {
        if args.len() != 1 {
            return Err(format!("`repr` takes exactly one argument, got {}", args.len()));
        }
        return Ok(Type::repr(args.into_iter().next().unwrap(), None));
    }
    Ok(Type::Con(name.to_string(), args))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_source_is_empty_program() {
        assert_eq!(parse_program("").unwrap().decls, vec![]);
    }

    #[test]
    fn bare_assignment_desugars_to_wildcard_target() {
        let p = parse_program("letimpl[n] foldl : _ -> _ -> !list_r -> _ = List.fold_left").unwrap();
        let Decl::Impl(imp) = &p.decls[0] else { panic!() };
        let expected = Type::arrows(
            vec![
                Type::Wildcard,
                Type::Wildcard,
                Type::Assign("list_r".into(), Box::new(Type::Wildcard)),
            ],
            Type::Wildcard,
        );
        assert_eq!(imp.annot.as_ref(), Some(&expected));
        assert_eq!(imp.cost, CostExpr::Var("n".into()));
    }

    #[test]
    fn type_application_and_tuples() {
        let t = parse_type("('a, keep_all * order_seq) ucoll repr").unwrap();
        let inner = Type::con(
            "ucoll",
            vec![
                Type::rigid("a"),
                Type::Tuple(vec![Type::nullary("keep_all"), Type::nullary("order_seq")]),
            ],
        );
        assert_eq!(t, Type::repr(inner, None));
    }

    #[test]
    fn scale_binds_to_the_operation() {
        let e = parse_expr("foldr (@n prepend) b a").unwrap();
        let scaled = Expr::Scaled(CostExpr::Var("n".into()), Box::new(Expr::var("prepend")));
        assert_eq!(e, Expr::apps(Expr::var("foldr"), vec![scaled, Expr::var("b"), Expr::var("a")]));
        let e = parse_expr("@n append acc x").unwrap();
        let scaled = Expr::Scaled(CostExpr::Var("n".into()), Box::new(Expr::var("append")));
        assert_eq!(e, Expr::apps(scaled, vec![Expr::var("acc"), Expr::var("x")]));
    }

    #[test]
    fn operators_have_usual_precedence() {
        let e = parse_expr("found || x = elem").unwrap();
        let eq = Expr::apps(Expr::var("="), vec![Expr::var("x"), Expr::var("elem")]);
        assert_eq!(e, Expr::apps(Expr::var("||"), vec![Expr::var("found"), eq]));
    }

    #[test]
    fn cost_grammar() {
        assert_eq!(
            parse_cost("min n W").unwrap(),
            CostExpr::bin(CostOp::Min, CostExpr::Var("n".into()), CostExpr::Var("W".into()))
        );
        let c = parse_cost("1.0 + n * log n").unwrap();
        let rhs = CostExpr::bin(
            CostOp::Mul,
            CostExpr::Var("n".into()),
            CostExpr::Log(Box::new(CostExpr::Var("n".into()))),
        );
        assert_eq!(c, CostExpr::bin(CostOp::Add, CostExpr::Lit(1.0), rhs));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_program("letop f : int\nletop g int").unwrap_err();
        assert_eq!(e.pos.line, 2);
        let e = parse_program("letfoo x = 1").unwrap_err();
        assert!(e.msg.contains("unknown keyword"), "{}", e.msg);
    }

    #[test]
    fn begin_match_with_tuple_binders() {
        let e = parse_expr("begin match split_first coll with | Some (_, coll) -> coll | None -> coll end")
            .unwrap();
        let Expr::Match(_, arms) = e else { panic!() };
        assert_eq!(arms[0].binders, vec!["_".to_string(), "coll".to_string()]);
        assert!(arms[1].binders.is_empty());
    }

    #[test]
    fn variant_and_alias_declarations() {
        let p = parse_program("type 'a opt = None | Some of 'a\ntype 'a seq = ('a seq_t) repr\ntype IntSet.t").unwrap();
        assert!(matches!(&p.decls[0], Decl::Variant { ctors, .. } if ctors.len() == 2));
        assert!(matches!(&p.decls[1], Decl::Type { alias: Some(Type::Repr(..)), .. }));
        assert!(matches!(&p.decls[2], Decl::Type { name, alias: None, .. } if name == "IntSet.t"));
    }
}
