//! Random benchmark programs over the UCT-lite library.
//!
//! A program is the library, an initial collection built at scale `0.0`,
//! and a function whose body is a sequence of code blocks, each holding
//! exactly one op use. Blocks are drawn uniformly with ChaCha8 seeded from
//! the requested seed, so the output is a pure function of the spec.

use std::fmt::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const UCT_LITE: &str = include_str!("../corpus/uct_lite.rml");

/// Extra externs the generated skeleton relies on.
const SKELETON_EXTERNS: &str = "\
external Sys.input : (int * int) list
external Sys.opaque_identity : 'a -> 'a
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitKind {
    Seq,
    Set,
    Map,
}

impl InitKind {
    pub const ALL: [InitKind; 3] = [InitKind::Seq, InitKind::Set, InitKind::Map];

    pub fn name(self) -> &'static str {
        match self {
            InitKind::Seq => "seq",
            InitKind::Set => "set",
            InitKind::Map => "map",
        }
    }

    fn annot(self) -> &'static str {
        match self {
            InitKind::Seq => "(int * int) seq",
            InitKind::Set => "(int * int) set",
            InitKind::Map => "(int, int) map",
        }
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<InitKind, String> {
        InitKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown init kind `{s}` (expected seq, set or map)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub size: usize,
    pub init: InitKind,
    pub seed: u64,
}

/// Targets a `view` block may switch to.
const VIEW_TARGETS: &[&str] = &[
    "(int * int) seq",
    "(int * int) set",
    "(int * int) sorted_set",
    "(int, int) map",
];

const BLOCKS: usize = 9;

fn block(out: &mut String, kind: usize, rng: &mut ChaCha8Rng, k: usize) {
    let e = rng.gen_range(0..100);
    let _ = match kind {
        0 => writeln!(out, "  let coll = concat coll coll in"),
        1 => writeln!(
            out,
            "  let coll =\n    begin match split_first coll with\n    | Some (_, coll) -> coll\n    | None -> coll\n    end in"
        ),
        2 => writeln!(out, "  let _s{k} = Sys.opaque_identity (size coll) in"),
        3 => {
            let t = VIEW_TARGETS[rng.gen_range(0..VIEW_TARGETS.len())];
            writeln!(out, "  let coll : {t} = view coll in")
        }
        4 => writeln!(out, "  let coll = prepend ({e}, {k}) coll in"),
        5 => writeln!(out, "  let coll = append coll ({e}, {k}) in"),
        6 => writeln!(out, "  let _m{k} = Sys.opaque_identity (member ({e}, {k}) coll) in"),
        7 => writeln!(out, "  let coll = map (fun x -> x) coll in"),
        _ => writeln!(
            out,
            "  let _f{k} = Sys.opaque_identity (foldl (fun acc x -> acc + 1) 0 coll) in"
        ),
    };
}

/// The generated program without the library prelude.
pub fn gen_body(spec: &GenSpec) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "(* generated: size={} init={} seed={} *)",
        spec.size, spec.init, spec.seed
    );
    out.push_str(SKELETON_EXTERNS);
    out.push_str("letop of_list : 'a list -> ('a, 'p) coll\n");
    out.push_str("letimpl[1.0] of_list = fun xs -> List.fold_left (fun acc x -> @n append acc x) empty xs\n");
    out.push_str("letimpl[1.0] of_list : _ -> !list_r _ = fun xs -> xs\n");
    let _ = writeln!(out, "let init : {} = @0.0 of_list Sys.input", spec.init.annot());
    out.push_str("let bench = fun iters ->\n  let coll = init in\n");
    for k in 0..spec.size {
        let kind = rng.gen_range(0..BLOCKS);
        block(&mut out, kind, &mut rng, k);
    }
    out.push_str("  coll\n");
    out
}

/// A complete, self-contained program.
pub fn gen_program(spec: &GenSpec) -> String {
    let mut out = String::from(UCT_LITE);
    out.push('\n');
    out.push_str(&gen_body(spec));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::analyze;

    #[test]
    fn deterministic() {
        let s = GenSpec {
            size: 3,
            init: InitKind::Seq,
            seed: 1,
        };
        assert_eq!(gen_program(&s), gen_program(&s));
        let other = GenSpec { seed: 2, ..s };
        assert_ne!(gen_body(&s), gen_body(&other));
    }

    #[test]
    fn block_count() {
        for size in [0, 1, 7] {
            let s = GenSpec {
                size,
                init: InitKind::Map,
                seed: 9,
            };
            let body = gen_body(&s);
            let lets = body.lines().filter(|l| l.starts_with("  let ")).count();
            assert_eq!(lets, size + 1);
        }
    }

    #[test]
    fn generated_programs_analyze() {
        for init in InitKind::ALL {
            for seed in 0..5 {
                let s = GenSpec { size: 6, init, seed };
                let src = gen_program(&s);
                if let Err(e) = analyze(&src) {
                    panic!("{e}\n{}", gen_body(&s));
                }
            }
        }
    }

    #[test]
    fn init_names_round_trip() {
        for k in InitKind::ALL {
            assert_eq!(k.name().parse::<InitKind>().unwrap(), k);
        }
        assert!("bag".parse::<InitKind>().is_err());
    }
}
