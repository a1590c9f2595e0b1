use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name)
}

fn reprsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reprsel")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const NO_SOLUTION: &str = "\
type A.t
type B.t
external A.f : A.t -> int
external B.g : B.t -> bool
letrepr a_r {int = A.t}
letrepr b_r {int = B.t}
letop f : int repr -> int
letop g : int repr -> bool
letimpl[1.0] f : !a_r (_ repr) -> _ = A.f
letimpl[1.0] g : !b_r (_ repr) -> _ = B.g
let h c = f c = 0 && g c
";

fn write(dir: &Path, name: &str, src: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, src).unwrap();
    p
}

#[test]
fn running_example_bottom_up() {
    let f = corpus("running_example.rml");
    let o = reprsel(&["compile", f.to_str().unwrap(), "--solver", "bottom-up", "--cost-var", "n=10000", "--cost-var", "W=63"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("(* cost 63 *)\n"), "{out}");
    assert!(out.contains("IntSet.contains"));
    for kw in ["letop", "letimpl", "letrepr"] {
        assert!(!out.contains(kw), "{kw} left in output");
    }
}

#[test]
fn show_seq_json() {
    let f = corpus("show_seq.rml");
    let o = reprsel(&["compile", f.to_str().unwrap(), "--cost-var", "n=1000", "--emit", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "ok");
    assert_eq!(v["solver"], "mixed");
    assert_eq!(v["cost"].as_f64(), Some(1009.0));
}

#[test]
fn several_targets_get_headers() {
    let f = corpus("running_example.rml");
    let o = reprsel(&["compile", f.to_str().unwrap(), "--cost-var", "n=10", "--cost-var", "W=3", "--emit", "tree", "--emit", "smt", "--emit", "resolved"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let headers: Vec<&str> = out.lines().filter(|l| l.starts_with("(* == ")).collect();
    assert_eq!(headers, ["(* == tree == *)", "(* == smt == *)", "(* == resolved == *)"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("nosol.rml", NO_SOLUTION, 5),
        ("parse.rml", "let = 3\n", 3),
        ("type.rml", "let x : int = true\n", 4),
    ];
    for (name, src, code) in cases {
        let p = write(dir.path(), name, src);
        let o = reprsel(&["compile", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(code), "{name}: {}", stderr(&o));
    }
    let f = corpus("running_example.rml");
    let o = reprsel(&["compile", f.to_str().unwrap(), "--cost-var", "n=10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("W"), "{}", stderr(&o));
    let o = reprsel(&["compile", "/nonexistent/x.rml"]);
    assert_eq!(o.status.code(), Some(1));
    let missing = dir.path().join("none.json");
    let o = reprsel(&["compile", f.to_str().unwrap(), "--cache", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(8));
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.txt");
    let f = corpus("show_seq.rml");
    let (f, c) = (f.to_str().unwrap(), cache.to_str().unwrap());
    let o = reprsel(&["compile", f, "--cost-var", "n=1000", "--cache", c, "--write-cache"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(cache.exists());
    let first = stdout(&o);
    let o = reprsel(&["compile", f, "--cost-var", "n=1000", "--cache", c, "--solver", "transfer"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), first);
}

#[test]
fn gen_is_deterministic() {
    let a = reprsel(&["gen", "--size", "5", "--init", "map", "--seed", "9"]);
    let b = reprsel(&["gen", "--size", "5", "--init", "map", "--seed", "9"]);
    let c = reprsel(&["gen", "--size", "5", "--init", "map", "--seed", "10"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let o = reprsel(&["gen", "--init", "tree"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_reports() {
    let o = reprsel(&["bench"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "size,seed,solver,outcome,elapsed_ms,cost,normalized_cost\n");
    let o = reprsel(&["bench", "--size", "1", "--seeds", "2", "--solver", "bottom-up", "--solver", "greedy", "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[3], "ok");
        assert_eq!(r[6], "1");
    }
}
