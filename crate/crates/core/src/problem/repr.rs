//! Applying a representation declaration to a represented type.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lang::ast::{ReprDecl, Type};
use crate::lang::printer::print_type;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReprError {
    #[error("`{arg}` does not match the pattern `{pattern}` of representation `{repr}`")]
    Mismatch { repr: String, pattern: String, arg: String },
    #[error("`{arg}` is not concrete enough to apply representation `{repr}`")]
    NotConcrete { repr: String, arg: String },
}

fn matches(pat: &Type, arg: &Type, binds: &mut BTreeMap<String, Type>) -> Result<(), bool> {
    match (pat, arg) {
        (Type::Rigid(v), _) => {
            match binds.get(v) {
                Some(prev) if prev != arg => return Err(false),
                _ => {
                    binds.insert(v.clone(), arg.clone());
                }
            }
            Ok(())
        }
        (_, Type::Var(_) | Type::Wildcard) => Err(true),
        (_, Type::Assign(_, inner)) => matches(pat, inner, binds),
        (Type::Con(n, ps), Type::Con(m, args)) if n == m && ps.len() == args.len() => {
            ps.iter().zip(args).try_for_each(|(p, a)| matches(p, a, binds))
        }
        (Type::Tuple(ps), Type::Tuple(args)) if ps.len() == args.len() => {
            ps.iter().zip(args).try_for_each(|(p, a)| matches(p, a, binds))
        }
        (Type::Arrow(p1, p2), Type::Arrow(a1, a2)) => {
            matches(p1, a1, binds)?;
            matches(p2, a2, binds)
        }
        (Type::Repr(p, _), Type::Repr(a, _)) => matches(p, a, binds),
        _ => Err(false),
    }
}

/// `apply_representation(r, T)`: match `T` against the pattern of `r` and
/// instantiate its target.
pub fn apply_representation(repr: &ReprDecl, arg: &Type) -> Result<Type, ReprError> {
    let mut binds = BTreeMap::new();
    matches(&repr.pattern, arg, &mut binds).map_err(|not_concrete| {
        if not_concrete {
            ReprError::NotConcrete {
                repr: repr.name.clone(),
                arg: print_type(arg),
            }
        } else {
            ReprError::Mismatch {
                repr: repr.name.clone(),
                pattern: print_type(&repr.pattern),
                arg: print_type(arg),
            }
        }
    })?;
    Ok(repr.target.map(&mut |t| match t {
        Type::Rigid(v) => binds.get(&v).cloned().unwrap_or(Type::Rigid(v)),
        t => t,
    }))
}

/// Replace every `!r (T repr)` in `t` by the representation type of `T` under `r`.
pub fn apply_assignments(t: &Type, reprs: &[ReprDecl]) -> Result<Type, ReprError> {
    let mut err = None;
    let out = t.map(&mut |t| match t {
        Type::Assign(r, inner) => {
            let arg = match *inner {
                Type::Repr(a, _) => *a,
                other => other,
            };
            match reprs.iter().find(|d| d.name == r) {
                Some(decl) => apply_representation(decl, &arg).unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    Type::Wildcard
                }),
                None => {
                    err.get_or_insert(ReprError::Mismatch {
                        repr: r.clone(),
                        pattern: "?".into(),
                        arg: print_type(&arg),
                    });
                    Type::Wildcard
                }
            }
        }
        t => t,
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_type;

    fn decl(name: &str, pat: &str, target: &str) -> ReprDecl {
        ReprDecl {
            name: name.into(),
            pattern: parse_type(pat).unwrap(),
            target: parse_type(target).unwrap(),
        }
    }

    #[test]
    fn pattern_instantiates_target() {
        let r = decl("rbmap_r", "('k * 'v, 'p) ucoll", "('k, 'v) RBMap.t");
        let arg = parse_type("(int * string, keep_last_key * unit) ucoll").unwrap();
        assert_eq!(print_type(&apply_representation(&r, &arg).unwrap()), "(int, string) RBMap.t");
    }

    #[test]
    fn mismatch_and_not_concrete() {
        let r = decl("iset_r", "int", "IntSet.t");
        assert!(matches!(
            apply_representation(&r, &Type::nullary("string")),
            Err(ReprError::Mismatch { .. })
        ));
        assert!(matches!(
            apply_representation(&r, &Type::Var(crate::lang::ast::UVar(0))),
            Err(ReprError::NotConcrete { .. })
        ));
    }
}
