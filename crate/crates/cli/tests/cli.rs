use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ccmpc"));
    c.env("CCMPC_LOG", "error");
    c
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value printed after `key` on its line.
fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no {key:?} in {out}"))
        .trim()
        .to_string()
}

fn product(alpha: f64, beta: f64, k: i32) -> f64 {
    (0..k).map(|i| 1.0 - beta * alpha.powi(i)).product()
}

#[test]
fn bound_from_epsilon() {
    let o = run(&[
        "bound",
        "--alpha",
        "0.8",
        "--beta",
        "0.05",
        "--epsilon",
        "0.01",
        "--p0",
        "1.96",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "khat"), "24");
    let phat: f64 = field(&out, "phat").parse().unwrap();
    assert!((phat - product(0.8, 0.05, 24)).abs() < 1e-6);
    let limit: f64 = field(&out, "limit").parse().unwrap();
    assert!(limit < phat);
}

#[test]
fn bound_with_forced_khat() {
    let o = run(&["bound", "--alpha", "0.8", "--beta", "0.05", "--khat", "36"]);
    assert!(o.status.success());
    let phat: f64 = field(&stdout(&o), "phat").parse().unwrap();
    assert!((phat - product(0.8, 0.05, 36)).abs() < 1e-6);
}

#[test]
fn bound_range_errors_are_usage_errors() {
    let o = run(&[
        "bound",
        "--alpha",
        "0.8",
        "--beta",
        "0.05",
        "--epsilon",
        "2",
        "--p0",
        "1.96",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["bound", "--alpha", "1.5", "--beta", "0.05", "--khat", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["bound", "--alpha", "0.8"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["fly"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn plan_first_example() {
    let o = run(&[
        "plan",
        "--config",
        &config("example1.json"),
        "--state",
        "1,1",
        "--order",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let seq: Vec<f64> = serde_json::from_str(&field(&out, "sequence")).unwrap();
    assert_eq!(seq.len(), 3);
    assert!(seq[0] < 0.0);
    field(&out, "trace");
    field(&out, "rank ratio");
}

#[test]
fn plan_inside_target() {
    let o = run(&[
        "plan",
        "--config",
        &config("example1.json"),
        "--state",
        "0.1,0",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("target reached"));
}

#[test]
fn plan_names_the_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("example1.json"))
        .unwrap()
        .replace("x1*x2 + w1 + u1", "x1*x2 + w1 + u1 +");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    let o = run(&["plan", "--config", path.to_str().unwrap(), "--state", "1,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.f[1]"));
}

#[test]
fn plan_wrong_state_length() {
    let o = run(&[
        "plan",
        "--config",
        &config("example1.json"),
        "--state",
        "1,1,1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn replay_first_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let o = run(&[
        "simulate",
        "--config",
        &config("example1.json"),
        "--x0",
        "1,1",
        "--out",
        out.to_str().unwrap(),
        "--replay",
        &config("example1_replay.json"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let mut x2: Vec<f64> = log["steps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["state"][1].as_f64().unwrap())
        .collect();
    x2.push(log["final_state"][1].as_f64().unwrap());
    for (g, w) in x2.iter().zip([1.0, 0.878, -0.0430, -0.168]) {
        assert!((g - w).abs() < 1e-3, "{x2:?}");
    }
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn seeded_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a", "b"] {
        let json = dir.path().join(format!("{name}.json"));
        let o = run(&[
            "simulate",
            "--config",
            &config("example1.json"),
            "--x0",
            "1,1",
            "--seed",
            "42",
            "--order",
            "2",
            "--samples",
            "1000",
            "--max-steps",
            "3",
            "--out",
            json.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0) | Some(2)));
        bytes.push((
            std::fs::read(&json).unwrap(),
            std::fs::read(json.with_extension("csv")).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn simulate_rejects_zero_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = run(&[
        "simulate",
        "--config",
        &config("example1.json"),
        "--x0",
        "1,1",
        "--max-steps",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn infeasible_step_exits_with_solver_failure() {
    // x1+ = x2 alone already leaves no room to contract
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = run(&[
        "simulate",
        "--config",
        &config("example1.json"),
        "--x0",
        "0.13,-0.37",
        "--order",
        "2",
        "--samples",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.exists());
}

#[test]
fn validate_first_example() {
    let o = run(&[
        "validate",
        "--config",
        &config("example1.json"),
        "--state",
        "1,1",
        "--input",
        "-0.5634",
        "--samples",
        "100000",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let parts: Vec<f64> = field(&out, "probability")
        .split("+-")
        .map(|s| s.trim().parse().unwrap())
        .collect();
    // (0.4366 + w)^2 <= 0.608 on w uniform in [-0.5, 0.5]
    let exact = 0.608f64.sqrt() - 0.4366 + 0.5;
    assert!((parts[0] - exact).abs() < 3.0 * parts[1] + 1e-4, "{out}");
}

#[test]
fn validate_impossible_input_and_strict_mode() {
    let args = [
        "validate",
        "--config",
        &config("example1.json"),
        "--state",
        "1,1",
        "--input",
        "30",
        "--samples",
        "1000",
    ];
    let o = run(&args);
    assert!(o.status.success());
    assert!(field(&stdout(&o), "probability").starts_with("0.0000"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(3));
}

#[test]
fn validate_refuses_few_samples() {
    let o = run(&[
        "validate",
        "--config",
        &config("example1.json"),
        "--state",
        "1,1",
        "--input",
        "-0.5634",
        "--samples",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inspect_exports_sdpa() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("step.dat-s");
    let o = run(&[
        "inspect-moments",
        "--config",
        &config("example1.json"),
        "--state",
        "1,1",
        "--order",
        "2",
        "--sdpa",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("block moment_y "), "{out}");
    let sdp = ccmpc::sdp::sdpa::read_sdpa(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(sdp.num_vars, 35 + 15);
}
