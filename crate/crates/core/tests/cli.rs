//! Exit-code contract and file outputs of the `loopalg` binary.

mod common;

use std::process::Command;

use common::{data, loops_of};
use loopalg::loopfront::parse_loop;

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_loopalg"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn invgen_success_and_json() {
    let (code, out, _) = bin(&["invgen", &data("odd_sum.loop")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("x - y^2\nz - 2*y\n"), "{out}");
    let (code, out, _) = bin(&["invgen", &data("odd_sum.loop"), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["invariants"], serde_json::json!(["x - y^2", "z - 2*y"]));
    assert_eq!(v["closed_forms"]["z"], "2*n");
    assert_eq!(v["valid_from"], 0);
    assert_eq!(v["timings_ms"], serde_json::json!({}));
    let (_, out, _) = bin(&["invgen", &data("odd_sum.loop"), "--format", "json", "--timings"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["timings_ms"]["elimination"].is_number());
}

#[test]
fn analysis_errors_exit_2() {
    let (code, _, err) = bin(&["invgen", &data("fib.loop")]);
    assert_eq!(code, 2);
    assert!(err.contains("IrrationalEigenvalue"), "{err}");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.loop");
    std::fs::write(&bad, "vars: x\nx := 0\nwhile true:\n    x := x*x\n").unwrap();
    let (code, _, err) = bin(&["invgen", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("NonAffineUpdate"), "{err}");
    std::fs::write(&bad, "vars: x\nx := (0\n").unwrap();
    assert_eq!(bin(&["invgen", bad.to_str().unwrap()]).0, 2);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(bin(&["invgen", "/nonexistent/input.loop"]).0, 1);
    assert_eq!(bin(&["invgen"]).0, 1);
    assert_eq!(bin(&["invgen", &data("odd_sum.loop"), "--no-such-flag"]).0, 1);
    assert_eq!(bin(&["synth", &data("unit.inv")]).0, 1);
    assert_eq!(bin(&["synth", &data("xy2.inv"), "--fix-init", "x"]).0, 1);
    assert_eq!(bin(&["synth", &data("xy2.inv"), "--fix-init", "q=1"]).0, 1);
    assert_eq!(bin(&["--version"]).0, 0);
}

#[test]
fn unsat_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("const.inv");
    // x stays 1 forever but must start at 0
    std::fs::write(&inv, "x - 1\n").unwrap();
    let (code, _, err) = bin(&["synth", inv.to_str().unwrap(), "--fix-init", "x=0"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("Unsat"));
}

#[test]
fn synth_emits_reingestible_loops() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loops.txt");
    let (code, out, _) = bin(&[
        "synth",
        &data("xy2.inv"),
        "--size",
        "2",
        "--fix-init",
        "x=0,y=0",
        "--all",
        "--max-models",
        "5",
        "--emit-loop",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), out);
    let loops = loops_of(&out);
    assert_eq!(loops.len(), 5);
    for l in &loops {
        let file = dir.path().join("one.loop");
        std::fs::write(&file, l).unwrap();
        parse_loop(l).unwrap();
        let (code, out, _) = bin(&["check", file.to_str().unwrap(), "--invariant", "x - y^2"]);
        assert_eq!(code, 0);
        assert!(out.ends_with("oracle PASS\n"), "{out}");
    }
    // byte-identical reruns
    let again = bin(&["synth", &data("xy2.inv"), "--size", "2", "--fix-init", "x=0,y=0", "--all", "--max-models", "5"]);
    assert_eq!(again.1, out);
}

#[test]
fn check_verdicts() {
    let (code, out, _) = bin(&["check", &data("odd_sum.loop"), "--invariant", "z - 2*y", "--iters", "50"]);
    assert_eq!(code, 0);
    assert_eq!(out, "z - 2*y: inductive PASS, oracle PASS\n");
    let (code, out, _) = bin(&["check", &data("drifted.loop"), "--invariant", "x - y^2"]);
    assert_eq!(code, 0);
    assert_eq!(out, "x - y^2: inductive FAIL, oracle FAIL at n=0\n");
    assert_eq!(bin(&["check", &data("drifted.loop"), "--invariant", "x - q"]).0, 2);
}

#[test]
fn emit_pcp_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("pcp");
    let (code, _, _) = bin(&["emit-pcp", &data("xy2.inv"), "--size", "2", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    let mut names: Vec<String> =
        std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["case_000.smt2", "case_001.smt2"]);
    let case0 = std::fs::read_to_string(out_dir.join("case_000.smt2")).unwrap();
    assert!(case0.starts_with("(set-logic QF_NRA)\n"));
    assert!(case0.contains("(check-sat)\n(get-value ("));

    let (code, out, _) = bin(&["emit-pcp", &data("xy2.inv"), "--size", "2", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["cases"].as_array().unwrap().len(), 2);
    assert_eq!(v["unknowns"][0], serde_json::json!({"name": "a1", "domain": "Int"}));

    let (code, out, _) = bin(&["emit-pcp", &data("xy2.inv"), "--mode", "disjunctive"]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("(check-sat)").count(), 1);
    assert!(out.contains("(assert (or "));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let target = blocker.join("sub");
    let (code, _, err) = bin(&["emit-pcp", &data("xy2.inv"), "--out", target.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("IoError"), "{err}");
}

#[test]
fn smt_solver_path() {
    let probe = Command::new("z3").arg("-version").output();
    if probe.is_err() {
        eprintln!("z3 not found; skipping");
        return;
    }
    let (code, out, err) = bin(&["synth", &data("xy2.inv"), "--solver", "smt", "--fix-init", "x=0,y=0", "--all", "--max-models", "3"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(loops_of(&out).len(), 3);
    let (code, _, err) = bin(&["synth", &data("xy2.inv"), "--solver", "smt", "--solver-cmd", "/nonexistent/solver"]);
    assert_eq!(code, 2);
    assert!(err.contains("SolverNotFound"), "{err}");
}
