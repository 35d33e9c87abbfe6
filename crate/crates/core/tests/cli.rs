//! End-to-end runs of the compiled binary: exit codes, stdout/stderr split,
//! and byte-identical output across runs.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graph-hopf"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn differential_of_e3_is_w2() {
    let dir = tempfile::tempdir().unwrap();
    let e3 = write(&dir, "e3.txt", "graph E3 { n=2; m=2; v1: v2 b1; v2: b2; }\n");
    let (code, out, err) = run(&["d", "--in", &e3]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(
        serde_json::from_str::<serde_json::Value>(&out).unwrap(),
        serde_json::json!({"1,2;[b1 b2]": "1/1"})
    );
}

#[test]
fn failing_cocycle_exits_one_with_p1_witness() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(&dir, "w.json", r#"{"1,1;[b1]": "1/1", "0,2;[]": "1/1"}"#);
    let (code, out, _) = run(&["cocycle", "--weights", &w, "--max-n", "2", "--max-m", "3"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let witness = v["witnesses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["graph"] == "1,2;[b1]")
        .expect("P1 witness");
    assert_eq!(witness["delta_w"], "2/1");
}

#[test]
fn hopf_check_exits_zero_on_small_range() {
    let (code, out, _) = run(&["check", "hopf", "--max-n", "2", "--max-m", "3"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let axioms = v["axioms"].as_array().unwrap();
    assert!(axioms.iter().all(|a| a["instances"].as_u64().unwrap() > 0));
    assert_eq!(
        code,
        0,
        "failing axioms: {}",
        serde_json::to_string(&v["axioms"]).unwrap()
    );
}

#[test]
fn d_squared_check_passes() {
    let (code, out, _) = run(&["check", "d2", "--max-n", "2", "--max-m", "3", "--max-l", "1"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.txt", "graph X { n=1; m=2; v1: b9; }\n");
    let (code, out, err) = run(&["d", "--in", &bad]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("graph X") && err.contains("dangling"), "{err}");

    let syntax = write(&dir, "syntax.txt", "graph X { n=1;\n m=2 v1: b1; }\n");
    let (code, _, err) = run(&["d", "--in", &syntax]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2, column 6"), "{err}");

    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["enumerate", "-n", "1", "-m", "2", "-l", "0", "--bogus"]).0, 2);
    assert_eq!(run(&["d", "--in", "/nonexistent/file"]).0, 2);
}

#[test]
fn obstruction_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(
        &dir,
        "s.json",
        r#"{"dim": 2, "fields": [[{"psi": [1, 2], "coeff": {"1,0": "1/1"}}]]}"#,
    );
    let args = write(
        &dir,
        "a.json",
        r#"{"dim": 2, "args": [{"1,0": "1/1"}, {"0,1": "1/1"}, {"1,1": "2/1"}]}"#,
    );
    let w = write(
        &dir,
        "w.json",
        r#"{"1,1;[b1]": "1/1", "1,2;[b1 b2]": "1/3", "0,2;[]": "1/2"}"#,
    );
    let (code, out, err) = run(&[
        "obstruction",
        "--weights",
        &w,
        "--state",
        &state,
        "--args",
        &args,
        "-n",
        "1",
        "-m",
        "3",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["agree"], true);
    assert_eq!(v["lhs"], v["rhs"]);
    assert_eq!(v["lhs"], v["direct"]);
    for (_, rec) in v["graphs"].as_object().unwrap() {
        assert_eq!(rec["c_gamma"], rec["delta_w"]);
    }
    // wrong boundary count is a usage error
    assert_eq!(
        run(&[
            "obstruction",
            "--weights",
            &w,
            "--state",
            &state,
            "--args",
            &args,
            "-n",
            "1",
            "-m",
            "2"
        ])
        .0,
        2
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        &dir,
        "g.txt",
        "graph A { n=2; m=2; v1: v2 b1; v2: b2; }\ngraph B { n=1; m=2; v1: b2; }\n",
    );
    for args in [
        vec!["--seed", "5", "coproduct", "--in", &g],
        vec!["--seed", "5", "antipode", "--in", &g],
        vec![
            "--seed",
            "5",
            "check",
            "cobar-d2",
            "--max-edges",
            "2",
            "--max-n",
            "2",
            "--max-m",
            "2",
            "--samples",
            "100",
        ],
        vec!["--seed", "5", "cohomology", "--max-edges", "2", "--max-len", "2"],
        vec![
            "--class",
            "no-parallel-off",
            "enumerate",
            "-n",
            "2",
            "-m",
            "1",
            "-l",
            "0",
        ],
    ] {
        let a = bin().args(&args).output().unwrap();
        let b = bin().args(&args).output().unwrap();
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
        assert!(!a.stdout.is_empty());
    }
}
