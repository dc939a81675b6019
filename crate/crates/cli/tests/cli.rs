use std::path::PathBuf;
use std::process::{Command, Output};

use oneshot::operator::io::read_state_file;
use oneshot::operator::{random_state, SystemLayout};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oneshot"))
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("oneshot-cli-{}-{name}", std::process::id()))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("JSON on stderr")
}

#[test]
fn hmax_of_maximally_mixed_fixture_is_one_bit() {
    let v = stdout_json(&run(&["entropy", "--kind", "hmax", "--state", &fixture("pi_ab.json"), "--split", "A|B"]));
    assert!((v["bits"].as_f64().unwrap() - 1.0).abs() < 1e-5, "{v}");
}

#[test]
fn relative_and_s_entropies_of_fixture() {
    let (state, sigma) = (fixture("pi_ab.json"), fixture("pi_b.json"));
    for (kind, extra) in [("hmin-rel", vec![]), ("hmax-rel", vec![]), ("hmax-rel", vec!["--sdp"]), ("s", vec!["--eps", "0.3"])] {
        let mut args = vec!["entropy", "--kind", kind, "--state", &state, "--split", "A|B", "--sigma", &sigma];
        args.extend(extra);
        let v = stdout_json(&run(&args));
        assert!((v["bits"].as_f64().unwrap() - 1.0).abs() < 1e-5, "{kind}: {v}");
    }
}

#[test]
fn smooth_at_zero_radius_is_nonsmooth_value() {
    let v = stdout_json(&run(&["smooth", "--kind", "hmin", "--state", &fixture("pi_ab.json"), "--split", "A|B", "--eps", "0"]));
    assert!((v["value"]["bits"].as_f64().unwrap() - 1.0).abs() < 1e-5, "{v}");
}

#[test]
fn counterexample_d2_has_zero_joint_min_entropy() {
    let v = stdout_json(&run(&["counterexample", "--d", "2"]));
    assert!(v["hmin_ab_given_ccp"]["combined"].as_f64().unwrap().abs() < 1e-4, "{v}");
    assert!((v["exact_formula"].as_f64().unwrap() + (1.25f64).log2()).abs() < 1e-6);
}

#[test]
fn outputs_are_deterministic() {
    let a = run(&["counterexample", "--d", "3"]);
    let b = run(&["counterexample", "--d", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn state_gen_round_trips_bit_exactly() {
    let path = scratch("roundtrip.json");
    let p = path.to_str().unwrap();
    let v = stdout_json(&run(&["state-gen", "--dims", "2,2,2", "--rank", "3", "--seed", "17", "-o", p]));
    assert_eq!(v["rank"], 3);
    let (rho, file) = read_state_file(&path).unwrap();
    let layout = SystemLayout::new([("A", 2), ("B", 2), ("C", 2)]).unwrap();
    let expected = random_state(&layout, 3, 17).unwrap();
    assert_eq!(rho.matrix(), expected.matrix());
    assert_eq!(file.seed, Some(17));
    std::fs::remove_file(&path).ok();
}

#[test]
fn chain_check_skips_rules_with_failed_side_condition() {
    let state = scratch("chain.json");
    let csv = scratch("chain.csv");
    let s = state.to_str().unwrap();
    stdout_json(&run(&["state-gen", "--dims", "2,2,2", "--rank", "2", "--seed", "3", "-o", s]));
    let v = stdout_json(&run(&["chain-check", "--state", s, "--params", "0.3,0.2,0.05,0.05", "--csv", csv.to_str().unwrap()]));
    let rule_1a = v["rules"].as_array().unwrap().iter().find(|r| r["rule_id"] == "1a").unwrap();
    assert_eq!(rule_1a["status"], "skipped");
    assert!(rule_1a["skipped_reason"].as_str().unwrap().contains("ε > ε′ + 2ε″"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "rule_id,lhs,rhs,slack,holds,skipped_reason,seed,dims,eps,eps1,eps2,eps3");
    assert_eq!(lines.count(), 9);
    std::fs::remove_file(&state).ok();
    std::fs::remove_file(&csv).ok();
}

#[test]
fn infinite_values_are_strings() {
    // π_B with |0⟩⟨0| as σ: supp ρ_B ⊄ supp σ_B gives −∞
    let sigma = scratch("sigma0.json");
    std::fs::write(&sigma, r#"{"factors":[{"label":"B","dim":2}],"matrix":[[[1,0],[0,0]],[[0,0],[0,0]]]}"#).unwrap();
    let v = stdout_json(&run(&[
        "entropy",
        "--kind",
        "hmin-rel",
        "--state",
        &fixture("pi_ab.json"),
        "--split",
        "A|B",
        "--sigma",
        sigma.to_str().unwrap(),
    ]));
    assert_eq!(v["bits"], "-inf");
    std::fs::remove_file(&sigma).ok();
}

#[test]
fn validation_errors_exit_with_one_and_json() {
    let state = fixture("pi_ab.json");
    for args in [
        vec!["entropy", "--kind", "hmax", "--state", &state, "--split", "A|Z"],
        vec!["entropy", "--kind", "s", "--state", &state, "--split", "A|B"],
        vec!["smooth", "--kind", "hmin", "--state", &state, "--split", "A|B", "--eps", "1.5"],
        vec!["chain-check", "--state", &state, "--params", "0.3,0.1"],
        vec!["state-gen", "--dims", "2,2", "--rank", "9", "-o", "/dev/null"],
        vec!["counterexample", "--d", "1"],
        vec!["no-such-verb"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let e = stderr_json(&o);
        assert!(e["error"].is_string() && e["message"].is_string(), "{e}");
    }
}

#[test]
fn verify_suite_reports_pass() {
    let v = stdout_json(&run(&["verify", "--suite", "operator", "--seed", "4", "--scale", "0.02"]));
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 5);
}
