//! First-order unification over [`Type`], generic over where bindings live.
//!
//! Inference uses the dense [`InferStore`]; validation and the solution tree
//! use the sparse [`ConstraintSet`], which can also record representation
//! assignments per rvar class.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lang::ast::{RVar, Type, UVar};
use crate::lang::printer::TypePrinter;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnifyError {
    #[error("cannot unify `{0}` with `{1}`")]
    Clash(String, String),
    #[error("occurs check: '_u{0} occurs in `{1}`")]
    Occurs(u32, String),
    #[error("representation variable {rvar} assigned both {first} and {second}")]
    ReprConflict { rvar: u32, first: usize, second: usize },
    /// A guarded store refused to record new information.
    #[error("constraint would bind a protected variable")]
    Guard,
}

pub trait Store {
    fn lookup(&self, u: UVar) -> Option<&Type>;
    fn bind(&mut self, u: UVar, t: Type) -> Result<(), UnifyError>;
    fn find(&self, r: RVar) -> RVar;
    /// Merge the classes of two roots.
    fn union(&mut self, a: RVar, b: RVar) -> Result<(), UnifyError>;
    /// Record that the class rooted at `r` uses representation `repr`.
    fn assign(&mut self, r: RVar, repr: usize) -> Result<(), UnifyError>;
    fn assignment(&self, r: RVar) -> Option<usize>;
}

fn show(t: &Type) -> String {
    TypePrinter::with_rvars().print(t)
}

/// Follow variable bindings at the head of `t`.
pub fn shallow<'a, S: Store + ?Sized>(s: &'a S, t: &'a Type) -> &'a Type {
    let mut cur = t;
    while let Type::Var(u) = cur {
        match s.lookup(*u) {
            Some(next) => cur = next,
            None => break,
        }
    }
    cur
}

/// Apply the substitution fully and replace rvars by their class roots.
pub fn zonk<S: Store + ?Sized>(s: &S, t: &Type) -> Type {
    match shallow(s, t) {
        Type::Con(n, args) => Type::Con(n.clone(), args.iter().map(|a| zonk(s, a)).collect()),
        Type::Tuple(items) => Type::Tuple(items.iter().map(|a| zonk(s, a)).collect()),
        Type::Arrow(a, b) => Type::arrow(zonk(s, a), zonk(s, b)),
        Type::Repr(a, r) => Type::Repr(Box::new(zonk(s, a)), r.map(|r| s.find(r))),
        Type::Assign(n, a) => Type::Assign(n.clone(), Box::new(zonk(s, a))),
        t => t.clone(),
    }
}

fn occurs<S: Store + ?Sized>(s: &S, u: UVar, t: &Type) -> bool {
    match shallow(s, t) {
        Type::Var(v) => *v == u,
        t => t.children().into_iter().any(|c| occurs(s, u, c)),
    }
}

pub fn unify_rvars<S: Store + ?Sized>(s: &mut S, a: RVar, b: RVar) -> Result<(), UnifyError> {
    let (ra, rb) = (s.find(a), s.find(b));
    if ra != rb {
        s.union(ra, rb)?;
    }
    Ok(())
}

fn bind_var<S: Store + ?Sized>(s: &mut S, u: UVar, t: &Type) -> Result<(), UnifyError> {
    if occurs(s, u, t) {
        return Err(UnifyError::Occurs(u.0, show(&zonk(s, t))));
    }
    s.bind(u, t.clone())
}

pub fn unify<S: Store + ?Sized>(s: &mut S, a: &Type, b: &Type) -> Result<(), UnifyError> {
    let a = shallow(s, a).clone();
    let b = shallow(s, b).clone();
    match (&a, &b) {
        (Type::Wildcard, _) | (_, Type::Wildcard) => Ok(()),
        (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
        (Type::Var(x), Type::Var(y)) => match s.bind(*x, b.clone()) {
            Err(UnifyError::Guard) => s.bind(*y, a.clone()),
            r => r,
        },
        (Type::Var(x), _) => bind_var(s, *x, &b),
        (_, Type::Var(y)) => bind_var(s, *y, &a),
        (Type::Assign(_, x), _) => unify(s, x, &b),
        (_, Type::Assign(_, y)) => unify(s, &a, y),
        (Type::Rigid(x), Type::Rigid(y)) if x == y => Ok(()),
        (Type::Con(n, xs), Type::Con(m, ys)) if n == m && xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys) {
                unify(s, x, y)?;
            }
            Ok(())
        }
        (Type::Tuple(xs), Type::Tuple(ys)) if xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys) {
                unify(s, x, y)?;
            }
            Ok(())
        }
        (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => {
            unify(s, a1, a2)?;
            unify(s, b1, b2)
        }
        (Type::Repr(x, r1), Type::Repr(y, r2)) => {
            unify(s, x, y)?;
            if let (Some(r1), Some(r2)) = (r1, r2) {
                unify_rvars(s, *r1, *r2)?;
            }
            Ok(())
        }
        _ => Err(UnifyError::Clash(show(&zonk(s, &a)), show(&zonk(s, &b)))),
    }
}

// ---- dense store used during inference ----

#[derive(Debug, Clone, Default)]
pub struct InferStore {
    subst: Vec<Option<Type>>,
    rparent: Vec<u32>,
}

impl InferStore {
    pub fn fresh_uvar(&mut self) -> UVar {
        self.subst.push(None);
        UVar(self.subst.len() as u32 - 1)
    }

    pub fn fresh_rvar(&mut self) -> RVar {
        let id = self.rparent.len() as u32;
        self.rparent.push(id);
        RVar(id)
    }

    pub fn fresh_var(&mut self) -> Type {
        Type::Var(self.fresh_uvar())
    }

    pub fn uvar_count(&self) -> u32 {
        self.subst.len() as u32
    }

    pub fn rvar_count(&self) -> u32 {
        self.rparent.len() as u32
    }
}

impl Store for InferStore {
    fn lookup(&self, u: UVar) -> Option<&Type> {
        self.subst.get(u.0 as usize).and_then(Option::as_ref)
    }

    fn bind(&mut self, u: UVar, t: Type) -> Result<(), UnifyError> {
        self.subst[u.0 as usize] = Some(t);
        Ok(())
    }

    fn find(&self, r: RVar) -> RVar {
        let mut cur = r.0;
        while self.rparent[cur as usize] != cur {
            cur = self.rparent[cur as usize];
        }
        RVar(cur)
    }

    fn union(&mut self, a: RVar, b: RVar) -> Result<(), UnifyError> {
        let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
        self.rparent[hi.0 as usize] = lo.0;
        Ok(())
    }

    fn assign(&mut self, _r: RVar, _repr: usize) -> Result<(), UnifyError> {
        Ok(())
    }

    fn assignment(&self, _r: RVar) -> Option<usize> {
        None
    }
}

// ---- sparse store: the constraint sets of validation and the tree ----

/// Unification-variable bindings, rvar equalities and rvar representation
/// assignments. Class roots are always the smallest member id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ConstraintSet {
    pub ubind: BTreeMap<UVar, Type>,
    pub rparent: BTreeMap<RVar, RVar>,
    /// Keyed by class root.
    pub rassign: BTreeMap<RVar, usize>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.ubind.is_empty() && self.rparent.is_empty() && self.rassign.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ubind.len() + self.rparent.len() + self.rassign.len()
    }

    /// Add every constraint of `other` to `self`.
    pub fn merge(&mut self, other: &ConstraintSet) -> Result<(), UnifyError> {
        replay(self, other)
    }

    pub fn merged(&self, other: &ConstraintSet) -> Option<ConstraintSet> {
        let mut out = self.clone();
        out.merge(other).ok().map(|_| out)
    }

    /// Constraints present in `self` but not in `base` (`self` must extend `base`).
    pub fn delta_from(&self, base: &ConstraintSet) -> ConstraintSet {
        ConstraintSet {
            ubind: self
                .ubind
                .iter()
                .filter(|(k, _)| !base.ubind.contains_key(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            rparent: self
                .rparent
                .iter()
                .filter(|(k, v)| base.rparent.get(k) != Some(v))
                .map(|(k, v)| (*k, *v))
                .collect(),
            rassign: self
                .rassign
                .iter()
                .filter(|(k, v)| base.rassign.get(k) != Some(v))
                .map(|(k, v)| (*k, *v))
                .collect(),
        }
    }

    /// Members of the class rooted at `root` that this store knows about.
    pub fn class_of(&self, root: RVar) -> Vec<RVar> {
        let mut out = vec![root];
        for k in self.rparent.keys() {
            if *k != root && self.find(*k) == root {
                out.push(*k);
            }
        }
        out
    }

    /// Every variable mentioned by the constraints.
    pub fn vars(&self) -> (BTreeSet<UVar>, BTreeSet<RVar>) {
        let mut us = BTreeSet::new();
        let mut rs = BTreeSet::new();
        for (u, t) in &self.ubind {
            us.insert(*u);
            us.extend(t.uvars());
            rs.extend(t.rvars());
        }
        for (a, b) in &self.rparent {
            rs.insert(*a);
            rs.insert(*b);
        }
        rs.extend(self.rassign.keys().copied());
        (us, rs)
    }

    /// rvar → representation for every rvar known to be assigned.
    pub fn assigned_rvars(&self) -> BTreeMap<RVar, usize> {
        let mut out = BTreeMap::new();
        for (root, repr) in &self.rassign {
            out.insert(*root, *repr);
        }
        for k in self.rparent.keys() {
            if let Some(repr) = self.rassign.get(&self.find(*k)) {
                out.insert(*k, *repr);
            }
        }
        out
    }
}

impl Store for ConstraintSet {
    fn lookup(&self, u: UVar) -> Option<&Type> {
        self.ubind.get(&u)
    }

    fn bind(&mut self, u: UVar, t: Type) -> Result<(), UnifyError> {
        self.ubind.insert(u, t);
        Ok(())
    }

    fn find(&self, r: RVar) -> RVar {
        let mut cur = r;
        while let Some(p) = self.rparent.get(&cur) {
            cur = *p;
        }
        cur
    }

    fn union(&mut self, a: RVar, b: RVar) -> Result<(), UnifyError> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        match (self.rassign.get(&lo).copied(), self.rassign.get(&hi).copied()) {
            (Some(x), Some(y)) if x != y => {
                return Err(UnifyError::ReprConflict {
                    rvar: lo.0,
                    first: x,
                    second: y,
                })
            }
            (None, Some(y)) => {
                self.rassign.insert(lo, y);
            }
            _ => {}
        }
        self.rassign.remove(&hi);
        self.rparent.insert(hi, lo);
        Ok(())
    }

    fn assign(&mut self, r: RVar, repr: usize) -> Result<(), UnifyError> {
        match self.rassign.get(&r) {
            Some(x) if *x != repr => Err(UnifyError::ReprConflict {
                rvar: r.0,
                first: *x,
                second: repr,
            }),
            _ => {
                self.rassign.insert(r, repr);
                Ok(())
            }
        }
    }

    fn assignment(&self, r: RVar) -> Option<usize> {
        self.rassign.get(&r).copied()
    }
}

/// Replay the constraints of `src` into `dst`.
pub fn replay<S: Store + ?Sized>(dst: &mut S, src: &ConstraintSet) -> Result<(), UnifyError> {
    for (a, b) in &src.rparent {
        unify_rvars(dst, *a, *b)?;
    }
    for (r, repr) in &src.rassign {
        let root = dst.find(*r);
        dst.assign(root, *repr)?;
    }
    for (u, t) in &src.ubind {
        unify(dst, &Type::Var(*u), t)?;
    }
    Ok(())
}

/// A view of a [`ConstraintSet`] that may only bind the variables accepted by
/// `allow`; any other new information fails with [`UnifyError::Guard`]. Used
/// to decide whether one constraint set implies another.
pub struct Guarded<'a, F: Fn(Var) -> bool> {
    pub inner: &'a mut ConstraintSet,
    pub allow: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    U(UVar),
    R(RVar),
}

impl<F: Fn(Var) -> bool> Guarded<'_, F> {
    fn class_allowed(&self, root: RVar) -> bool {
        self.inner.class_of(root).into_iter().all(|r| (self.allow)(Var::R(r)))
    }
}

impl<F: Fn(Var) -> bool> Store for Guarded<'_, F> {
    fn lookup(&self, u: UVar) -> Option<&Type> {
        self.inner.lookup(u)
    }

    fn bind(&mut self, u: UVar, t: Type) -> Result<(), UnifyError> {
        if !(self.allow)(Var::U(u)) {
            return Err(UnifyError::Guard);
        }
        self.inner.bind(u, t)
    }

    fn find(&self, r: RVar) -> RVar {
        self.inner.find(r)
    }

    fn union(&mut self, a: RVar, b: RVar) -> Result<(), UnifyError> {
        if !self.class_allowed(a) && !self.class_allowed(b) {
            return Err(UnifyError::Guard);
        }
        self.inner.union(a, b)
    }

    fn assign(&mut self, r: RVar, repr: usize) -> Result<(), UnifyError> {
        if self.inner.assignment(r) == Some(repr) {
            return Ok(());
        }
        if !self.class_allowed(r) {
            return Err(UnifyError::Guard);
        }
        self.inner.assign(r, repr)
    }

    fn assignment(&self, r: RVar) -> Option<usize> {
        self.inner.assignment(r)
    }
}

/// Does `strong` imply `weak`, treating the variables accepted by
/// `existential` as local to `weak`?
pub fn implies(strong: &ConstraintSet, weak: &ConstraintSet, existential: impl Fn(Var) -> bool) -> bool {
    let mut copy = strong.clone();
    let mut g = Guarded {
        inner: &mut copy,
        allow: existential,
    };
    replay(&mut g, weak).is_ok()
}
