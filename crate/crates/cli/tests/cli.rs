use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn vmdp(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_vmdp")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn tests_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

/// Write `text` to a fresh file under the target temp dir.
fn scratch(name: &str, text: &str) -> PathBuf {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let n = NEXT.fetch_add(1, Ordering::Relaxed);
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("{n}_{name}"));
    std::fs::write(&path, text).unwrap();
    path
}

fn gadget(name: &str) -> PathBuf {
    let r = vmdp(&["gen-gadget", name]);
    assert_eq!(r.code, 0);
    scratch(&format!("{name}.txt"), &r.stdout)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn coin_as_reach_exits_zero() {
    let coin = gadget("FIX-COIN");
    let r = vmdp(&["check", s(&coin), "--problem", "as-reach"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("answer: YES\n"));
    assert!(r.stdout.contains("reference: Theorem 8"));
    assert!(r.stdout.contains("certificate strategy:"));

    let r = vmdp(&["check", s(&coin), "--problem", "sure-reach"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.starts_with("answer: NO\n"));
}

#[test]
fn query_file_overrides_system_lines() {
    let dec = gadget("FIX-DEC");
    let q = scratch("dec.query", "problem sure-reach\ninit q0 [ 1 ]\ntarget f\n");
    let r = vmdp(&["check", s(&dec), "--query", s(&q)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let r = vmdp(&["check", s(&dec), "--query", s(&q), "--problem", "as-buchi"]);
    assert!(r.stdout.contains("problem: as-buchi"));
}

#[test]
fn usage_errors_exit_three() {
    let coin = gadget("FIX-COIN");
    assert_eq!(vmdp(&["check", s(&coin)]).code, 3);
    assert_eq!(vmdp(&["check", s(&coin), "--problem", "maybe-reach"]).code, 3);
    assert_eq!(vmdp(&["frobnicate"]).code, 3);
    assert_eq!(vmdp(&["classify", "/nonexistent/system.txt"]).code, 3);
    assert_eq!(vmdp(&["gen-gadget", "FIX-NOPE"]).code, 3);
    assert_eq!(vmdp(&["--help"]).code, 0);
}

#[test]
fn parse_errors_carry_position() {
    let bad = scratch("bad_owner.txt", "vassmdp d=1\nstate a owner=Q\n");
    let r = vmdp(&["classify", s(&bad)]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("bad_owner.txt:2:9:"), "{}", r.stderr);

    let bad = scratch("bad_dim.txt", "vassmdp d=1\nstate a owner=1\ntrans t a -> a [ 1 2 ] w=1\n");
    let r = vmdp(&["classify", s(&bad)]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains(":3:"), "{}", r.stderr);
}

#[test]
fn reduce_dim_reaches_dimension_zero() {
    let pump = gadget("FIX-PUMP");
    let r = vmdp(&["reduce-dim", s(&pump)]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("vassmdp d=0\n"));
    assert!(r.stdout.contains("# c1_s λ=(c1_s,[*])"));

    let reduced = scratch("pump_reduced.txt", &r.stdout);
    let r = vmdp(&["check", s(&reduced), "--problem", "as-reach"]);
    assert_eq!(r.code, 0, "{}", r.stdout);

    let trace = scratch("pump.trace", "");
    let r = vmdp(&["reduce-dim", s(&pump), "--all", "--trace", s(&trace)]);
    assert_eq!(r.code, 0);
    assert!(!r.stdout.contains('#'));
    assert!(std::fs::read_to_string(&trace).unwrap().contains("n0 λ=(s,[0])"));
}

#[test]
fn classify_encodings() {
    let m = tests_dir().join("data/mixed.minsky");
    let cases = [
        ("general", "general deadlock-free=true"),
        ("pvass-deadlock", "p-vass deadlock-free=false"),
        ("pvass-deadlockfree", "p-vass deadlock-free=true"),
    ];
    for (fig, line) in cases {
        let e = vmdp(&["encode-minsky", s(&m), "--figure", fig]);
        assert_eq!(e.code, 0);
        let path = scratch(&format!("mixed_{fig}.txt"), &e.stdout);
        let r = vmdp(&["classify", s(&path)]);
        assert_eq!(r.stdout.lines().next(), Some(line), "{fig}");
    }
}

#[test]
fn undecidable_cells_with_heuristics() {
    let m = tests_dir().join("data/five_step.minsky");
    let e = vmdp(&["encode-minsky", s(&m), "--figure", "pvass-deadlockfree"]);
    let path = scratch("five_step_deadlockfree.txt", &e.stdout);
    let r = vmdp(&["check", s(&path), "--problem", "as-reach"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.stdout.lines().next(), Some("answer: UNDECIDABLE_CLASS(Theorem 15)"));
    assert!(!r.stdout.contains("note:"));
    let r = vmdp(&["check", s(&path), "--problem", "as-reach", "--cap", "3"]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains("note: heuristic: bounded oracle with cap 3 says YES"), "{}", r.stdout);
}

#[test]
fn simulate_prints_csv() {
    let pump = gadget("FIX-PUMP");
    let a = vmdp(&["simulate", s(&pump), "--runs", "500", "--cap", "50", "--seed", "3"]);
    assert_eq!(a.code, 0);
    let lines: Vec<_> = a.stdout.lines().collect();
    assert_eq!(lines[0], "instance,strategy,runs,cap,frequency,seed");
    let row: Vec<_> = lines[1].split(',').collect();
    assert_eq!(&row[1..4], ["uniform", "500", "50"]);
    assert_eq!(row[5], "3");
    let f: f64 = row[4].parse().unwrap();
    assert!((0.0..=1.0).contains(&f));
    let b = vmdp(&["simulate", s(&pump), "--runs", "500", "--cap", "50", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);

    let coin = gadget("FIX-COIN");
    let r = vmdp(&["simulate", s(&coin), "--runs", "200", "--strategy", "region"]);
    assert!(r.stdout.contains(",region,200,200,1.000000,0"), "{}", r.stdout);
    assert_eq!(vmdp(&["simulate", s(&coin), "--runs", "0"]).code, 3);
}

#[test]
fn oracle_command() {
    let dec = gadget("FIX-DEC");
    let r = vmdp(&["oracle", s(&dec), "--problem", "as-reach", "--cap", "3"]);
    assert_eq!((r.code, r.stdout.as_str()), (1, "NO\n"));

    let pump = gadget("FIX-PUMP");
    let r = vmdp(&["oracle", s(&pump), "--problem", "sure-reach", "--cap", "2"]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.starts_with("UNKNOWN("), "{}", r.stdout);
}

#[test]
fn eval_formula_reports_membership() {
    let coin = gadget("FIX-COIN");
    let r = vmdp(&["eval-formula", s(&coin), "mu X. f | <any> X"]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("exact: true"));
    assert!(r.stdout.ends_with("init: member\n"));

    let r = vmdp(&["eval-formula", s(&coin), "f"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.ends_with("init: not-member\n"));

    let pump = gadget("FIX-PUMP");
    let r = vmdp(&["eval-formula", s(&pump), "nu X. <any> X", "--nu-budget", "0"]);
    assert!(r.stdout.contains("exact: "));

    assert_eq!(vmdp(&["eval-formula", s(&coin), "<2> f"]).code, 3);
}
