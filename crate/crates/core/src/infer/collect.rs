use std::collections::{BTreeMap, BTreeSet};

use super::scheme::fresh_names;
use super::AnnotatedProgram;
use crate::lang::ast::{RVar, Type, UVar};
use crate::problem::{ImplDef, OpUse, Problem, TopLevelUse};

fn rename(t: &Type, map: &BTreeMap<String, String>) -> Type {
    t.map(&mut |t| match t {
        Type::Rigid(n) => Type::Rigid(map.get(&n).cloned().unwrap_or(n)),
        t => t,
    })
}

/// Build the solver input: implementations with rigid names renamed apart,
/// and every top-level op use with the implementations in scope there.
pub fn collect_problem(ap: &AnnotatedProgram) -> Problem {
    // Which impls mention each variable; usize::MAX for top-level uses.
    let mut owners_r: BTreeMap<RVar, BTreeSet<usize>> = BTreeMap::new();
    let mut owners_u: BTreeMap<UVar, BTreeSet<usize>> = BTreeMap::new();
    let mut note = |t: &Type, owner: usize| {
        for r in t.rvars() {
            owners_r.entry(r).or_default().insert(owner);
        }
        for u in t.uvars() {
            owners_u.entry(u).or_default().insert(owner);
        }
    };
    for (i, imp) in ap.impls.iter().enumerate() {
        note(&imp.ty, i);
        for u in &imp.uses {
            note(&u.ty, i);
        }
    }
    for u in &ap.top_uses {
        note(&u.ty, usize::MAX);
    }

    let mut counter = 0usize;
    let mut impls = Vec::new();
    for (i, imp) in ap.impls.iter().enumerate() {
        let mut names = imp.ty.rigid_names();
        for u in &imp.uses {
            for n in u.ty.rigid_names() {
                if !names.contains(&n) {
                    names.push(n);
                }
            }
        }
        let fresh: Vec<String> = fresh_names(&BTreeSet::new()).skip(counter).take(names.len()).collect();
        counter += names.len();
        let map: BTreeMap<String, String> = names.into_iter().zip(fresh).collect();
        let only_here = |owners: Option<&BTreeSet<usize>>| owners.is_some_and(|o| o.len() == 1 && o.contains(&i));
        let mut local_rvars = BTreeSet::new();
        let mut local_uvars = BTreeSet::new();
        let mut all = imp.ty.clone().rvars();
        let mut all_u = imp.ty.uvars();
        for u in &imp.uses {
            all.extend(u.ty.rvars());
            all_u.extend(u.ty.uvars());
        }
        for r in all {
            if only_here(owners_r.get(&r)) {
                local_rvars.insert(r);
            }
        }
        for u in all_u {
            if only_here(owners_u.get(&u)) {
                local_uvars.insert(u);
            }
        }
        impls.push(ImplDef {
            cost: imp.cost.clone(),
            op: imp.op.clone(),
            ty: rename(&imp.ty, &map),
            uses: imp
                .uses
                .iter()
                .map(|u| OpUse {
                    scale: u.scale.clone(),
                    op: u.op.clone(),
                    ty: rename(&u.ty, &map),
                })
                .collect(),
            decl: imp.decl,
            local_rvars,
            local_uvars,
        });
    }

    let uses = ap
        .top_uses
        .iter()
        .map(|u| TopLevelUse {
            use_: OpUse {
                scale: u.scale.clone(),
                op: u.op.clone(),
                ty: u.ty.clone(),
            },
            scope: (0..impls.len()).filter(|i| impls[*i].decl < u.decl).collect(),
            decl: u.decl,
            site: u.site,
        })
        .collect();

    Problem {
        reprs: ap.reprs.clone(),
        impls,
        uses,
        next_uvar: ap.next_uvar,
        next_rvar: ap.next_rvar,
    }
}
