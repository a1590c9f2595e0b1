//! Instantiation and generalization of type schemes.

use std::collections::{BTreeMap, BTreeSet};

use super::unify::{zonk, InferStore};
use crate::lang::ast::{RVar, Type, TypeScheme, UVar};

/// Replace the quantified rigid variables of `scheme` by fresh uvars. With
/// `fresh_rvars`, every representation variable is renamed apart as well,
/// consistently within the scheme.
pub fn instantiate(scheme: &TypeScheme, store: &mut InferStore, fresh_rvars: bool) -> (Type, BTreeMap<String, UVar>) {
    let mut vars = BTreeMap::new();
    for q in &scheme.quantified {
        vars.insert(q.clone(), store.fresh_uvar());
    }
    let mut rmap: BTreeMap<RVar, RVar> = BTreeMap::new();
    let ty = scheme.body.map(&mut |t| match t {
        Type::Rigid(n) => match vars.get(&n) {
            Some(u) => Type::Var(*u),
            None => Type::Rigid(n),
        },
        Type::Repr(a, r) if fresh_rvars => {
            let r = Some(match r {
                Some(r) => *rmap.entry(r).or_insert_with(|| store.fresh_rvar()),
                None => store.fresh_rvar(),
            });
            Type::Repr(a, r)
        }
        t => t,
    });
    (ty, vars)
}

/// Give every `repr` without an rvar a fresh one.
pub fn assign_rvars(t: &Type, store: &mut InferStore) -> Type {
    t.map(&mut |t| match t {
        Type::Repr(a, None) => Type::Repr(a, Some(store.fresh_rvar())),
        t => t,
    })
}

/// Type-variable names `'a`, `'b`, ... skipping those in `taken`.
pub fn fresh_names(taken: &BTreeSet<String>) -> impl Iterator<Item = String> + '_ {
    (0usize..).filter_map(move |i| {
        let letter = (b'a' + (i % 26) as u8) as char;
        let name = if i < 26 { letter.to_string() } else { format!("{letter}{}", i / 26) };
        (!taken.contains(&name)).then_some(name)
    })
}

/// Zonk `t` and turn its remaining free uvars into rigid names. `preferred`
/// suggests names for particular uvars; other uvars get fresh letters.
pub fn generalize_closed(t: &Type, store: &InferStore, preferred: &[(String, UVar)]) -> Type {
    let z = zonk(store, t);
    let free = z.uvars();
    let mut taken: BTreeSet<String> = z.rigid_names().into_iter().collect();
    let mut names: BTreeMap<UVar, String> = BTreeMap::new();
    for (name, u) in preferred {
        if let Type::Var(v) = zonk(store, &Type::Var(*u)) {
            if free.contains(&v) && !names.contains_key(&v) && !taken.contains(name) {
                names.insert(v, name.clone());
                taken.insert(name.clone());
            }
        }
    }
    let rest: Vec<UVar> = free.iter().filter(|v| !names.contains_key(v)).copied().collect();
    let fresh: Vec<String> = fresh_names(&taken).take(rest.len()).collect();
    names.extend(rest.into_iter().zip(fresh));
    z.map(&mut |t| match t {
        Type::Var(v) => Type::Rigid(names[&v].clone()),
        t => t,
    })
}
