//! SMT-LIB2 export of a solution tree and the external solver loop.
//!
//! Every node gets a Boolean selection variable. Representation variables
//! become integers ranging over the representation indices, and uvar
//! bindings to ground types become equalities over type fingerprints.
//! Bindings the encoding cannot express are checked after decoding; a
//! model that violates them is blocked and the solver asked again.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Stdio};
use web_time::Instant;

use thiserror::Error;

use super::{Found, Search};
use crate::infer::unify::ConstraintSet;
use crate::lang::ast::Type;
use crate::soltree::{AndId, Item, Node, SolTree};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("SMT solver `{0}` not found")]
    NotFound(String),
    #[error("SMT solver I/O error: {0}")]
    Io(String),
    #[error("SMT solver reported `{0}`")]
    Unknown(String),
    #[error("cannot parse SMT solver output: {0}")]
    Parse(String),
}

/// A selectable node: its variable, the instances it picks and its cost.
#[derive(Debug, Clone)]
pub struct SmtNode {
    pub var: String,
    pub choice: Vec<AndId>,
    pub cost: f64,
    pub cons: ConstraintSet,
}

#[derive(Debug, Clone)]
pub struct SmtEncoding {
    pub text: String,
    pub vars: Vec<String>,
    /// Nodes that carry constraints or cost, by selection variable.
    pub nodes: Vec<SmtNode>,
}

fn real(v: f64) -> String {
    let s = format!("{}", v.abs());
    let s = if s.contains('.') { s } else { format!("{s}.0") };
    if v < 0.0 {
        format!("(- {s})")
    } else {
        s
    }
}

fn ground(t: &Type) -> bool {
    let mut ok = true;
    t.walk(&mut |t| {
        if matches!(t, Type::Var(_) | Type::Repr(_, Some(_)) | Type::Wildcard) {
            ok = false;
        }
    });
    ok
}

struct Enc {
    decls: String,
    body: String,
    vars: Vec<String>,
    nodes: Vec<SmtNode>,
    costs: Vec<String>,
    rvars: BTreeMap<u32, ()>,
    uvars: BTreeMap<u32, ()>,
    fps: BTreeMap<String, usize>,
    nreprs: usize,
}

impl Enc {
    fn var(&mut self, comment: &str) -> String {
        let v = format!("n{}", self.vars.len());
        let _ = writeln!(self.decls, "(declare-const {v} Bool) ; {comment}");
        self.vars.push(v.clone());
        v
    }

    fn rv(&mut self, r: u32) -> String {
        if self.rvars.insert(r, ()).is_none() {
            let _ = writeln!(self.decls, "(declare-const r{r} Int)");
            let _ = writeln!(self.body, "(assert (and (>= r{r} 0) (< r{r} {})))", self.nreprs);
        }
        format!("r{r}")
    }

    fn uv(&mut self, u: u32) -> String {
        if self.uvars.insert(u, ()).is_none() {
            let _ = writeln!(self.decls, "(declare-const u{u} Int)");
        }
        format!("u{u}")
    }

    fn constraints(&mut self, v: &str, cons: &ConstraintSet) {
        for (r, i) in &cons.rassign {
            let x = self.rv(r.0);
            let _ = writeln!(self.body, "(assert (=> {v} (= {x} {i})))");
        }
        for (a, b) in &cons.rparent {
            let (x, y) = (self.rv(a.0), self.rv(b.0));
            let _ = writeln!(self.body, "(assert (=> {v} (= {x} {y})))");
        }
        for (u, t) in &cons.ubind {
            let x = self.uv(u.0);
            match t {
                Type::Var(w) => {
                    let y = self.uv(w.0);
                    let _ = writeln!(self.body, "(assert (=> {v} (= {x} {y})))");
                }
                t if ground(t) => {
                    let key = crate::lang::print_type(t);
                    let n = self.fps.len();
                    let fp = *self.fps.entry(key).or_insert(n);
                    let _ = writeln!(self.body, "(assert (=> {v} (= {x} {fp})))");
                }
                _ => {}
            }
        }
    }

    fn selectable(&mut self, v: &str, choice: &[AndId], cost: f64, cons: &ConstraintSet) {
        self.constraints(v, cons);
        if cost != 0.0 {
            self.costs.push(format!("(ite {v} {} 0.0)", real(cost)));
        }
        self.nodes.push(SmtNode {
            var: v.to_string(),
            choice: choice.to_vec(),
            cost,
            cons: cons.clone(),
        });
    }

    fn node(&mut self, n: &Node, v: &str) {
        match n {
            Node::Single { choice, meta } => self.selectable(v, choice, meta.cost, &meta.cons),
            Node::And { ands, children, meta } => {
                self.selectable(v, ands, meta.cost, &meta.cons);
                for c in children {
                    let cv = self.var("and child");
                    let _ = writeln!(self.body, "(assert (= {cv} {v}))");
                    self.node(c, &cv);
                }
            }
            Node::Or { op, children, .. } => {
                if children.is_empty() {
                    let _ = writeln!(self.body, "(assert (not {v}))");
                    return;
                }
                let mut cvs = Vec::new();
                for c in children {
                    let label = match c {
                        Node::Single { choice, .. } | Node::And { ands: choice, .. } => format!("{op} {choice:?}"),
                        Node::Or { .. } => op.clone(),
                    };
                    let cv = self.var(&label);
                    let _ = writeln!(self.body, "(assert (=> {cv} {v}))");
                    self.node(c, &cv);
                    cvs.push(cv);
                }
                let ones: Vec<String> = cvs.iter().map(|c| format!("(ite {c} 1 0)")).collect();
                let _ = writeln!(self.body, "(assert (=> {v} (= (+ 0 {}) 1)))", ones.join(" "));
            }
        }
    }
}

fn encode_with(t: &SolTree, blocked: &[Vec<String>], bound: Option<f64>, minimize: bool) -> SmtEncoding {
    let mut e = Enc {
        decls: String::new(),
        body: String::new(),
        vars: Vec::new(),
        nodes: Vec::new(),
        costs: Vec::new(),
        rvars: BTreeMap::new(),
        uvars: BTreeMap::new(),
        fps: BTreeMap::new(),
        nreprs: t.repr_names.len().max(1),
    };
    let root = e.var("root");
    let _ = writeln!(e.body, "(assert {root})");
    e.node(&t.root, &root);
    let mut text = String::from("; representation selection model\n");
    for (i, n) in t.repr_names.iter().enumerate() {
        let _ = writeln!(text, "; repr {i} = {n}");
    }
    text.push_str("(set-option :produce-models true)\n");
    text.push_str(&e.decls);
    text.push_str(&e.body);
    let total = if e.costs.is_empty() {
        "0.0".to_string()
    } else {
        format!("(+ 0.0 {})", e.costs.join(" "))
    };
    let _ = writeln!(text, "(define-fun total_cost () Real {total})");
    for b in blocked {
        let _ = writeln!(text, "(assert (not (and true {})))", b.join(" "));
    }
    if let Some(b) = bound {
        let _ = writeln!(text, "(assert (< total_cost {}))", real(b));
    }
    if minimize {
        text.push_str("(minimize total_cost)\n");
    }
    text.push_str("(check-sat)\n");
    let _ = writeln!(text, "(get-value ({}))", e.vars.join(" "));
    SmtEncoding {
        text,
        vars: e.vars,
        nodes: e.nodes,
    }
}

/// The SMT-LIB2 model of `t` with a `minimize` objective on the total cost.
pub fn encode_smt(t: &SolTree) -> SmtEncoding {
    encode_with(t, &[], None, true)
}

/// Parse the answer to `(check-sat)` followed by `(get-value ...)`.
/// `Ok(None)` means unsat.
pub fn decode_values(out: &str) -> Result<Option<BTreeMap<String, bool>>, SmtError> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    for ch in out.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    match toks.first().map(String::as_str) {
        Some("sat") => {}
        Some("unsat") => return Ok(None),
        Some(other) => return Err(SmtError::Unknown(other.to_string())),
        None => return Err(SmtError::Parse("empty output".into())),
    }
    let mut vals = BTreeMap::new();
    let mut i = 1;
    while i < toks.len() {
        if toks[i] == "(" && i + 3 < toks.len() && toks[i + 3] == ")" && toks[i + 1] != "(" {
            let v = match toks[i + 2].as_str() {
                "true" => true,
                "false" => false,
                other => return Err(SmtError::Parse(format!("unexpected value `{other}`"))),
            };
            vals.insert(toks[i + 1].clone(), v);
            i += 4;
        } else {
            i += 1;
        }
    }
    Ok(Some(vals))
}

fn run_solver(path: &Path, text: &str, deadline: Option<Instant>) -> Result<Option<String>, SmtError> {
    let mut cmd = Command::new(path);
    cmd.arg("-in");
    if let Some(d) = deadline {
        let left = d.saturating_duration_since(Instant::now());
        if left.is_zero() {
            return Ok(None);
        }
        cmd.arg(format!("-T:{}", left.as_secs().max(1)));
    }
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                SmtError::NotFound(path.display().to_string())
            }
            _ => SmtError::Io(e.to_string()),
        })?;
    child
        .stdin
        .take()
        .expect("stdin is piped")
        .write_all(text.as_bytes())
        .map_err(|e| SmtError::Io(e.to_string()))?;
    let out = child.wait_with_output().map_err(|e| SmtError::Io(e.to_string()))?;
    let s = String::from_utf8_lossy(&out.stdout).into_owned();
    if s.trim_start().starts_with("timeout") || deadline.is_some_and(|d| Instant::now() >= d) && !s.starts_with("sat") && !s.starts_with("unsat") {
        return Ok(None);
    }
    Ok(Some(s))
}

/// Merge the constraints of the selected nodes; `None` if they conflict.
fn check(sel: &[&SmtNode]) -> Option<Item> {
    let mut full = ConstraintSet::default();
    let mut choice = Vec::new();
    let mut cost = 0.0;
    for n in sel {
        full.merge(&n.cons).ok()?;
        choice.extend(&n.choice);
        cost += n.cost;
    }
    choice.sort_unstable();
    Some(Item {
        cost,
        choice,
        cons: full,
    })
}

/// Solve `t` with the external solver. Models that break constraints the
/// encoding leaves out are blocked and the solver is asked again; without
/// `minimize` support the cost bound is tightened until unsat instead.
pub fn solve_external_smt(t: &SolTree, s: &mut Search) -> Result<Found, SmtError> {
    let minimize = s.opts.smt_minimize;
    let mut blocked: Vec<Vec<String>> = Vec::new();
    let mut best: Option<Item> = None;
    loop {
        let bound = if minimize { None } else { best.as_ref().map(|b| b.cost) };
        let enc = encode_with(t, &blocked, bound, minimize);
        s.stats.nodes_visited += 1;
        let Some(out) = run_solver(&s.opts.smt_path, &enc.text, s.deadline)? else {
            return Ok(match best {
                Some(b) => Found::Items(vec![b]),
                None => Found::Timeout,
            });
        };
        let Some(vals) = decode_values(&out)? else {
            return Ok(match best {
                Some(b) => Found::Items(vec![b]),
                None => Found::NoSolution,
            });
        };
        let sel: Vec<&SmtNode> = enc
            .nodes
            .iter()
            .filter(|n| vals.get(&n.var).copied().unwrap_or(false))
            .collect();
        match check(&sel) {
            Some(it) if minimize => return Ok(Found::Items(vec![it])),
            Some(it) => best = Some(it),
            None => blocked.push(sel.iter().map(|n| n.var.clone()).collect()),
        }
    }
}
