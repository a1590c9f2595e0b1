//! Desugaring of implementation annotations: `_` placeholders are filled
//! in from the op type and `!r` assignments refine the represented type
//! with the pattern of `r`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{ReprDecl, Type, TypeScheme};
use crate::infer::scheme::{generalize_closed, instantiate};
use crate::infer::unify::{unify, zonk, InferStore, UnifyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesugarError {
    #[error("annotation does not match the op type: {0}")]
    Mismatch(UnifyError),
    #[error("unknown representation `{0}`")]
    UnknownRepr(String),
    #[error("`!{0}` applied to a non-repr type")]
    NotRepr(String),
    #[error("representation `{0}` does not fit this type: {1}")]
    Pattern(String, UnifyError),
}

/// Produce the closed implementation type for `annot` (or the op type when
/// absent). Rigid names of the annotation stay rigid; the result keeps its
/// `!r` nodes and the rvar classes recorded in `store`.
pub fn desugar_impl_annotation(
    annot: Option<&Type>,
    op: &TypeScheme,
    reprs: &[ReprDecl],
    store: &mut InferStore,
) -> Result<Type, DesugarError> {
    let annot = annot.cloned().unwrap_or(Type::Wildcard);
    let filled = annot.map(&mut |t| match t {
        Type::Wildcard => store.fresh_var(),
        t => t,
    });
    let (inst, op_vars) = instantiate(op, store, true);
    unify(store, &filled.strip_assignments(), &inst).map_err(DesugarError::Mismatch)?;

    let mut assigns = Vec::new();
    filled.walk(&mut |t| {
        if let Type::Assign(r, inner) = t {
            assigns.push((r.clone(), (**inner).clone()));
        }
    });
    for (r, inner) in assigns {
        let decl = reprs
            .iter()
            .find(|d| d.name == r)
            .ok_or_else(|| DesugarError::UnknownRepr(r.clone()))?;
        let Type::Repr(arg, _) = zonk(store, &inner) else {
            return Err(DesugarError::NotRepr(r));
        };
        let (pat, _) = instantiate(&TypeScheme::closed(decl.pattern.clone()), store, false);
        unify(store, &arg, &pat).map_err(|e| DesugarError::Pattern(r.clone(), e))?;
    }

    let preferred: Vec<_> = op_vars.into_iter().collect::<BTreeMap<_, _>>().into_iter().collect();
    let ordered: Vec<_> = op
        .quantified
        .iter()
        .filter_map(|q| preferred.iter().find(|(n, _)| n == q).cloned())
        .collect();
    Ok(generalize_closed(&filled, store, &ordered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::scheme::assign_rvars;
    use crate::lang::parser::parse_type;
    use crate::lang::printer::print_type;

    fn scheme(src: &str) -> TypeScheme {
        TypeScheme::closed(parse_type(src).unwrap())
    }

    fn reprs() -> Vec<ReprDecl> {
        vec![
            ReprDecl {
                name: "list_r".into(),
                pattern: parse_type("'a").unwrap(),
                target: parse_type("'a list").unwrap(),
            },
            ReprDecl {
                name: "iset_r".into(),
                pattern: parse_type("int").unwrap(),
                target: parse_type("IntSet.t").unwrap(),
            },
        ]
    }

    fn run(annot: Option<&str>, op: &str) -> Result<String, DesugarError> {
        let mut st = InferStore::default();
        let op = scheme(op);
        let op = TypeScheme {
            body: assign_rvars(&op.body, &mut st),
            ..op
        };
        let annot = annot.map(|a| assign_rvars(&parse_type(a).unwrap(), &mut st));
        desugar_impl_annotation(annot.as_ref(), &op, &reprs(), &mut st).map(|t| print_type(&t))
    }

    const FOLD: &str = "('a -> 'b -> 'a) -> 'a -> 'b repr -> 'a";

    #[test]
    fn assignment_forces_pattern() {
        assert_eq!(
            run(Some("_ -> _ -> !iset_r -> _"), FOLD).unwrap(),
            "('a -> int -> 'a) -> 'a -> !iset_r (int repr) -> 'a"
        );
    }

    #[test]
    fn omitted_annotation_is_op_type() {
        assert_eq!(run(None, FOLD).unwrap(), "('a -> 'b -> 'a) -> 'a -> 'b repr -> 'a");
    }

    #[test]
    fn rigid_annotation_names_are_kept() {
        assert_eq!(
            run(Some("('x -> 'y -> 'x) -> 'x -> !list_r ('y repr) -> 'x"), FOLD).unwrap(),
            "('x -> 'y -> 'x) -> 'x -> !list_r ('y repr) -> 'x"
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(run(Some("int"), FOLD), Err(DesugarError::Mismatch(_))));
        assert!(matches!(run(Some("_ -> _ -> !nope -> _"), FOLD), Err(DesugarError::UnknownRepr(_))));
        assert!(matches!(run(Some("!list_r -> _ -> _ -> _"), FOLD), Err(DesugarError::NotRepr(_))));
        assert!(matches!(
            run(Some("_ -> _ -> !iset_r -> _"), "(string -> 'b -> string) -> string -> string repr -> string"),
            Err(DesugarError::Pattern(..))
        ));
    }
}
