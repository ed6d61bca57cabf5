use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lehmer-hunt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exited")
}

#[test]
fn check_exit_codes() {
    let out = run(&["check", "561"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "not_lehmer");
    assert_eq!(v["subject"], "561");
    assert_eq!(json(&run(&["check", "7"]))["status"], "prime");
    assert_eq!(code(&["check", "abc"]), 1);
    assert_eq!(code(&["check", "0"]), 1);
    assert_eq!(code(&["check", "-5"]), 1);
}

#[test]
fn unresolved_check_exits_two() {
    // Carmichael number (6k+1)(12k+1)(18k+1), k = 1000051: passes every
    // Fermat test, so only factoring can decide it
    let n = "1296198694153288947529";
    let out = run(&["check", n, "--effort", "trial=100,rho=10,rounds=2"]);
    assert_eq!(json(&out)["status"], "unresolved");
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["check", n]);
    assert_eq!(json(&out)["failed_condition"], "divisibility_fails");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn search_exit_codes() {
    let out = run(&["search", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["counters"]["lehmer_found"], 0);
    let out = run(&["search", "1e18"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource limit"));
    assert_eq!(code(&["search", "1e40"]), 1);
    assert_eq!(code(&["search", "ten"]), 1);
}

#[test]
fn repunit_exit_codes() {
    assert_eq!(code(&["repunit", "--L", "0.5"]), 1);
    assert_eq!(code(&["repunit", "--L", "64"]), 1);
    assert_eq!(code(&["repunit", "--L", "2", "--mode", "sideways"]), 1);
    assert_eq!(code(&["repunit", "--L", "2", "--workers", "0"]), 1);
    let out = run(&["repunit", "--L", "2", "--mode", "odd", "--n-max", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["complete"], true);
    assert_eq!(v["candidates"].as_array().unwrap().len(), 0);
}

#[test]
fn repunit_writes_out_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = run(&[
        "repunit",
        "--L",
        "14",
        "--mode",
        "even",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("record,kind,family,g,n,detail"));
    assert!(lines
        .next()
        .unwrap()
        .starts_with("certificate,empty_by_k15,even,"));
}

#[test]
fn repunit_checkpoint_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("cp.jsonl");
    let args = |budget: &'static str| {
        vec![
            "repunit",
            "--L",
            "14",
            "--mode",
            "odd",
            "--n-max",
            "40",
            "--budget",
            budget,
            "--unit-span",
            "2",
            "--checkpoint",
            cp.to_str().unwrap().to_string().leak(),
        ]
    };
    let first = json(&run(&args("4")));
    assert_eq!(first["checkpoints"]["consumed"], 0);
    let second = json(&run(&args("4")));
    assert_eq!(
        second["checkpoints"]["consumed"],
        first["counters"]["units"]
    );
}

#[test]
fn verify_exit_codes() {
    let out = run(&["verify", "nielsen", "--trials", "200", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["violations"], 0);
    assert_eq!(code(&["verify", "valuation", "--trials", "200"]), 0);
    assert_eq!(code(&["verify", "bogus"]), 1);
    assert_eq!(code(&["verify", "chain", "--trials", "0"]), 1);
}

#[test]
fn bounds_table() {
    let out = run(&["bounds", "--k-max", "4", "--values"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    assert_eq!(rows[3]["new_bound"], "65280");
    assert_eq!(rows[1]["relation"], "<");
    assert_eq!(code(&["bounds", "--k-min", "5", "--k-max", "4"]), 1);
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn max_bits_env_caps_allocation() {
    let out = Command::new(env!("CARGO_BIN_EXE_lehmer-hunt"))
        .args(["bounds", "--k-min", "12", "--k-max", "12", "--values"])
        .env("LEHMER_HUNT_MAX_BITS", "64")
        .output()
        .unwrap();
    // the table falls back to the bit bracket instead of allocating
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)[0]["method"], "bit_bracket");
    let bad = Command::new(env!("CARGO_BIN_EXE_lehmer-hunt"))
        .args(["check", "15"])
        .env("LEHMER_HUNT_MAX_BITS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
