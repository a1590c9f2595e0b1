//! Solution skeletons from earlier runs, used by the `transfer` solver.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::infer::rename_rigids;
use crate::lang::TypePrinter;
use crate::problem::{alpha_normalize, Problem, Solution};
use crate::soltree::{Node, SolTree};

pub const CACHE_HEADER: &str = "reprsel-cache v1";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported cache version: `{0}`")]
    Version(String),
    #[error("malformed cache entry on line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// An implementation is identified by its op and a hash of its annotation,
/// so that skeletons survive edits elsewhere in the program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Skeleton {
    pub op: String,
    pub fp: String,
    pub subs: Vec<Skeleton>,
}

impl fmt::Display for Skeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.op, self.fp)?;
        if !self.subs.is_empty() {
            f.write_str("(")?;
            for (i, s) in self.subs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{s}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Annotation fingerprint of implementation `id`.
pub fn fingerprint(p: &Problem, id: usize) -> String {
    let d = &p.impls[id];
    let ty = TypePrinter::with_rvars().print(&alpha_normalize(&rename_rigids(&d.ty)));
    let h = Sha256::digest(format!("{}:{ty}", d.op).as_bytes());
    h.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

pub fn skeleton(p: &Problem, s: &Solution) -> Skeleton {
    Skeleton {
        op: p.impls[s.impl_id].op.clone(),
        fp: fingerprint(p, s.impl_id),
        subs: s.subs.iter().map(|x| skeleton(p, x)).collect(),
    }
}

/// Skeletons closed under taking sub-solutions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionCache {
    pub entries: BTreeSet<Skeleton>,
}

impl SolutionCache {
    pub fn insert(&mut self, s: Skeleton) {
        for sub in &s.subs {
            self.insert(sub.clone());
        }
        self.entries.insert(s);
    }

    pub fn from_solutions(p: &Problem, sols: &[Solution]) -> SolutionCache {
        let mut c = SolutionCache::default();
        for s in sols {
            c.insert(skeleton(p, s));
        }
        c
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Does some entry use implementation `(op, fp)` at its root?
    pub fn knows(&self, op: &str, fp: &str) -> bool {
        self.entries.iter().any(|e| e.op == op && e.fp == fp)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{CACHE_HEADER}\n");
        for e in &self.entries {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }
}

struct P<'a> {
    s: &'a [u8],
    i: usize,
}

impl P<'_> {
    fn ident(&mut self, what: &str) -> Result<String, String> {
        let start = self.i;
        while self.i < self.s.len() && !b":(),".contains(&self.s[self.i]) {
            self.i += 1;
        }
        if self.i == start {
            return Err(format!("expected {what} at column {}", start + 1));
        }
        Ok(String::from_utf8_lossy(&self.s[start..self.i]).into_owned())
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn skeleton(&mut self) -> Result<Skeleton, String> {
        let op = self.ident("an op name")?;
        if !self.eat(b':') {
            return Err(format!("expected `:` at column {}", self.i + 1));
        }
        let fp = self.ident("a fingerprint")?;
        let mut subs = Vec::new();
        if self.eat(b'(') {
            loop {
                subs.push(self.skeleton()?);
                if self.eat(b')') {
                    break;
                }
                if !self.eat(b',') {
                    return Err(format!("expected `,` or `)` at column {}", self.i + 1));
                }
            }
        }
        Ok(Skeleton { op, fp, subs })
    }
}

pub fn parse_cache(text: &str) -> Result<SolutionCache, CacheError> {
    let mut lines = text.lines();
    let mut cache = SolutionCache::default();
    match lines.next() {
        None => return Ok(cache),
        Some(h) if h.trim() == CACHE_HEADER => {}
        Some(h) => return Err(CacheError::Version(h.trim().to_string())),
    }
    for (n, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut p = P { s: line.as_bytes(), i: 0 };
        let sk = p
            .skeleton()
            .and_then(|s| {
                if p.i == line.len() {
                    Ok(s)
                } else {
                    Err(format!("trailing input at column {}", p.i + 1))
                }
            })
            .map_err(|msg| CacheError::Malformed { line: n + 2, msg })?;
        cache.insert(sk);
    }
    Ok(cache)
}

pub fn load_cache(path: &Path) -> Result<SolutionCache, CacheError> {
    parse_cache(&std::fs::read_to_string(path)?)
}

pub fn save_cache(cache: &SolutionCache, path: &Path) -> Result<(), CacheError> {
    std::fs::write(path, cache.to_text())?;
    Ok(())
}

/// Drop `Or` alternatives whose implementation no cached solution uses;
/// an `Or` that would become empty keeps all its alternatives.
pub fn filter_tree(t: &SolTree, p: &Problem, cache: &SolutionCache) -> SolTree {
    if cache.is_empty() {
        return t.clone();
    }
    let fps: Vec<String> = (0..p.impls.len()).map(|i| fingerprint(p, i)).collect();
    let known = |n: &Node| match n {
        Node::And { ands, .. } if ands.len() == 1 => {
            let id = t.ands[ands[0]].impl_id;
            cache.knows(&p.impls[id].op, &fps[id])
        }
        _ => true,
    };
    fn go(n: Node, known: &dyn Fn(&Node) -> bool) -> Node {
        match n {
            Node::Single { .. } => n,
            Node::And { ands, children, meta } => Node::And {
                ands,
                children: children.into_iter().map(|c| go(c, known)).collect(),
                meta,
            },
            Node::Or { op, children, meta } => {
                let keep: Vec<bool> = children.iter().map(known).collect();
                let any = keep.iter().any(|k| *k);
                let children = children
                    .into_iter()
                    .zip(keep)
                    .filter(|(_, k)| *k || !any)
                    .map(|(c, _)| go(c, known))
                    .collect();
                Node::Or { op, children, meta }
            }
        }
    }
    t.with_root(go(t.root.clone(), &known))
}
