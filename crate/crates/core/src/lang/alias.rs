//! Type alias expansion.

use std::collections::HashMap;

use super::ast::*;
use super::error::AliasError;

struct Alias<'a> {
    params: &'a [String],
    rhs: &'a Type,
}

struct Expander<'a> {
    aliases: HashMap<&'a str, Alias<'a>>,
}

impl Expander<'_> {
    fn expand(&self, t: &Type, stack: &mut Vec<String>) -> Result<Type, AliasError> {
        Ok(match t {
            Type::Con(name, args) => {
                let args = args
                    .iter()
                    .map(|a| self.expand(a, stack))
                    .collect::<Result<Vec<_>, _>>()?;
                match self.aliases.get(name.as_str()) {
                    None => Type::Con(name.clone(), args),
                    Some(alias) => {
                        if alias.params.len() != args.len() {
                            return Err(AliasError::Arity {
                                name: name.clone(),
                                expected: alias.params.len(),
                                got: args.len(),
                            });
                        }
                        if stack.contains(name) {
                            return Err(AliasError::Cycle(name.clone()));
                        }
                        let subst: HashMap<&str, &Type> =
                            alias.params.iter().map(String::as_str).zip(args.iter()).collect();
                        let body = alias.rhs.map(&mut |t| match t {
                            Type::Rigid(ref v) => subst.get(v.as_str()).map_or(t.clone(), |a| (*a).clone()),
                            t => t,
                        });
                        stack.push(name.clone());
                        let out = self.expand(&body, stack);
                        stack.pop();
                        out?
                    }
                }
            }
            Type::Arrow(a, b) => Type::arrow(self.expand(a, stack)?, self.expand(b, stack)?),
            Type::Tuple(items) => Type::Tuple(
                items
                    .iter()
                    .map(|a| self.expand(a, stack))
                    .collect::<Result<_, _>>()?,
            ),
            Type::Repr(a, r) => Type::Repr(Box::new(self.expand(a, stack)?), *r),
            Type::Assign(n, a) => Type::Assign(n.clone(), Box::new(self.expand(a, stack)?)),
            Type::Rigid(_) | Type::Var(_) | Type::Wildcard => t.clone(),
        })
    }

    fn ty(&self, t: &Type) -> Result<Type, AliasError> {
        self.expand(t, &mut Vec::new())
    }

    fn expr(&self, e: &Expr) -> Result<Expr, AliasError> {
        Ok(match e {
            Expr::LetIn {
                name,
                recursive,
                annot,
                bound,
                body,
            } => Expr::LetIn {
                name: name.clone(),
                recursive: *recursive,
                annot: annot.as_ref().map(|t| self.ty(t)).transpose()?,
                bound: Box::new(self.expr(bound)?),
                body: Box::new(self.expr(body)?),
            },
            Expr::Var(_) | Expr::Lit(_) => e.clone(),
            Expr::Lambda(p, b) => Expr::Lambda(p.clone(), Box::new(self.expr(b)?)),
            Expr::App(f, a) => Expr::app(self.expr(f)?, self.expr(a)?),
            Expr::If(c, t, f) => Expr::If(
                Box::new(self.expr(c)?),
                Box::new(self.expr(t)?),
                Box::new(self.expr(f)?),
            ),
            Expr::Match(s, arms) => Expr::Match(
                Box::new(self.expr(s)?),
                arms.iter()
                    .map(|a| {
                        Ok(MatchArm {
                            ctor: a.ctor.clone(),
                            binders: a.binders.clone(),
                            body: self.expr(&a.body)?,
                        })
                    })
                    .collect::<Result<_, AliasError>>()?,
            ),
            Expr::Tuple(items) => Expr::Tuple(items.iter().map(|i| self.expr(i)).collect::<Result<_, _>>()?),
            Expr::List(items) => Expr::List(items.iter().map(|i| self.expr(i)).collect::<Result<_, _>>()?),
            Expr::Scaled(c, inner) => Expr::Scaled(c.clone(), Box::new(self.expr(inner)?)),
        })
    }

    fn scheme(&self, s: &TypeScheme) -> Result<TypeScheme, AliasError> {
        let body = self.ty(&s.body)?;
        Ok(TypeScheme {
            quantified: body.rigid_names(),
            body,
        })
    }

    fn decl(&self, d: &Decl) -> Result<Decl, AliasError> {
        Ok(match d {
            Decl::Type {
                name,
                params,
                alias,
            } => Decl::Type {
                name: name.clone(),
                params: params.clone(),
                alias: alias.as_ref().map(|t| self.ty(t)).transpose()?,
            },
            Decl::Variant {
                name,
                params,
                ctors,
            } => Decl::Variant {
                name: name.clone(),
                params: params.clone(),
                ctors: ctors
                    .iter()
                    .map(|c| {
                        Ok(CtorDecl {
                            name: c.name.clone(),
                            arg: c.arg.as_ref().map(|t| self.ty(t)).transpose()?,
                        })
                    })
                    .collect::<Result<_, AliasError>>()?,
            },
            Decl::Repr(r) => Decl::Repr(ReprDecl {
                name: r.name.clone(),
                pattern: self.ty(&r.pattern)?,
                target: self.ty(&r.target)?,
            }),
            Decl::Op { name, scheme } => Decl::Op {
                name: name.clone(),
                scheme: self.scheme(scheme)?,
            },
            Decl::Impl(imp) => Decl::Impl(ImplDecl {
                cost: imp.cost.clone(),
                op: imp.op.clone(),
                annot: imp.annot.as_ref().map(|t| self.ty(t)).transpose()?,
                body: self.expr(&imp.body)?,
            }),
            Decl::Let {
                name,
                recursive,
                annot,
                body,
            } => Decl::Let {
                name: name.clone(),
                recursive: *recursive,
                annot: annot.as_ref().map(|t| self.ty(t)).transpose()?,
                body: self.expr(body)?,
            },
            Decl::Extern { name, scheme } => Decl::Extern {
                name: name.clone(),
                scheme: self.scheme(scheme)?,
            },
        })
    }
}

/// Replace every alias application by its right-hand side, to a fixpoint.
pub fn expand_aliases(program: &Program) -> Result<Program, AliasError> {
    let mut aliases = HashMap::new();
    for d in &program.decls {
        if let Decl::Type {
            name,
            params,
            alias: Some(rhs),
        } = d
        {
            aliases.insert(name.as_str(), Alias { params, rhs });
        }
    }
    let ex = Expander { aliases };
    let decls = program
        .decls
        .iter()
        .map(|d| ex.decl(d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Program {
        decls,
        positions: program.positions.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse_program, parse_type};
    use super::*;

    fn op_type(p: &Program, name: &str) -> Type {
        p.decls
            .iter()
            .find_map(|d| match d {
                Decl::Op { name: n, scheme } if n == name => Some(scheme.body.clone()),
                _ => None,
            })
            .unwrap()
    }

    #[test]
    fn seq_alias_expands_to_repr() {
        let p = parse_program("type 'a seq_t\ntype 'a seq = ('a seq_t) repr\nletop s : int seq").unwrap();
        let e = expand_aliases(&p).unwrap();
        assert_eq!(op_type(&e, "s"), Type::repr(Type::con("seq_t", vec![Type::nullary("int")]), None));
    }

    #[test]
    fn nested_property_aliases() {
        let src = "type ('a, 'p) ucoll\ntype ('a, 'p) coll = (('a, 'p) ucoll) repr\n\
                   type ('k, 'v) map = ('k * 'v, keep_last_key * _) coll\nletop m : (int, int) map";
        let e = expand_aliases(&parse_program(src).unwrap()).unwrap();
        let expected = parse_type("(int * int, keep_last_key * _) ucoll repr").unwrap();
        assert_eq!(op_type(&e, "m"), expected);
    }

    #[test]
    fn alias_free_program_unchanged_and_idempotent() {
        let p = parse_program("letop f : int -> 'a list\nlet x = 1").unwrap();
        assert_eq!(expand_aliases(&p).unwrap(), p);
        let q = parse_program("type 'a s = 'a list repr\nletop f : 'a s -> 'a s").unwrap();
        let once = expand_aliases(&q).unwrap();
        assert_eq!(expand_aliases(&once).unwrap(), once);
    }

    #[test]
    fn cycles_and_arity_rejected() {
        let p = parse_program("type a = b\ntype b = a\nletop f : a").unwrap();
        assert!(matches!(expand_aliases(&p), Err(AliasError::Cycle(_))));
        let p = parse_program("type 'a s = 'a list\nletop f : (int, int) s").unwrap();
        assert!(matches!(expand_aliases(&p), Err(AliasError::Arity { .. })));
    }
}
