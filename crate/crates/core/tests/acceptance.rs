//! Acceptance criteria at full trial counts and exact tolerances. Each test prints one
//! PASS/FAIL line to the uncaptured standard output.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use oneshot::chain::{
    counterexample_report, default_h, error_g, random_campaign, CampaignConfig, CampaignResult, SmoothingParams,
};
use oneshot::verify::{self, CheckResult};

const SEED: u64 = 20_240_601;

fn report(id: &str, ok: bool, detail: &str) {
    let line = format!("criterion {id}: {} | {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout();
    out.write_all(line.as_bytes()).expect("stdout");
    out.flush().expect("stdout");
}

fn summary(c: &CheckResult) -> String {
    format!(
        "{}: {} trials, {} violations, {} errors, max measure {:?} (tol {:e}){}",
        c.name,
        c.trials,
        c.violations,
        c.errors,
        c.max_error,
        c.tolerance,
        c.first_failure.as_ref().map(|f| format!(", first failure: {f}")).unwrap_or_default()
    )
}

fn conclude(id: &str, checks: &[CheckResult], extra: &str) {
    let ok = checks.iter().all(|c| c.passed);
    let mut detail: Vec<String> = checks.iter().map(summary).collect();
    if !extra.is_empty() {
        detail.push(extra.to_string());
    }
    let detail = detail.join("; ");
    report(id, ok, &detail);
    assert!(ok, "criterion {id}: {detail}");
}

fn campaign() -> &'static CampaignResult {
    static CAMPAIGN: OnceLock<CampaignResult> = OnceLock::new();
    CAMPAIGN.get_or_init(|| {
        let cfg = CampaignConfig::qubits(50, verify::campaign_params(), SEED);
        random_campaign(&cfg).expect("campaign runs")
    })
}

#[test]
fn criterion_01_zero_duality_gap() {
    let start = Instant::now();
    let c = verify::hmax_zero_gap(50, SEED);
    let secs = start.elapsed().as_secs_f64();
    let timely = secs < 120.0;
    let extra = format!("runtime {secs:.1} s (target < 120 s)");
    let ok = c.passed && timely;
    report("1", ok, &format!("{}; {extra}", summary(&c)));
    assert!(ok, "{c:#?} {extra}");
}

#[test]
fn criterion_02_smooth_duality() {
    let checks = verify::smooth_duality(50, SEED);
    conclude("2", &checks, "ε ∈ {0, 0.05, 0.1}");
}

#[test]
fn criterion_03_chain_rule_campaign() {
    let checks = verify::campaign_checks_from(campaign());
    let rules: Vec<CheckResult> = checks.into_iter().filter(|c| c.name == "chain-rules-hold").collect();
    let s = &campaign().summary;
    let mins: Vec<String> = s
        .per_rule
        .iter()
        .filter(|(id, _)| !id.contains("nonsmooth"))
        .map(|(id, r)| format!("{id} min slack {:?}", r.min_slack.map(|b| b.to_f64())))
        .collect();
    assert_eq!(rules[0].trials, 50 * 8);
    conclude("3", &rules, &mins.join(", "));
}

#[test]
fn criterion_04_nonsmooth_corollary() {
    let g = error_g(&SmoothingParams::new(0.5, 0.0, 0.0, 0.0).unwrap(), 1.0).unwrap().to_f64();
    let constant_ok = (g - 4.0).abs() <= 1e-9;
    let checks = verify::campaign_checks_from(campaign());
    let cor: Vec<CheckResult> = checks.into_iter().filter(|c| c.name == "nonsmooth-corollary").collect();
    let extra = format!("g(0,0,0,1) = {g:.9}");
    if !constant_ok {
        report("4", false, &extra);
        panic!("criterion 4: {extra}");
    }
    conclude("4", &cor, &extra);
}

#[test]
fn criterion_05_g_below_six() {
    let checks: Vec<CheckResult> =
        verify::g_constant_checks().into_iter().filter(|c| c.name == "g-below-six").collect();
    let g = error_g(&SmoothingParams::new(0.5, 0.05, 0.05, 0.04).unwrap(), 1.0).unwrap().to_f64();
    conclude("5", &checks, &format!("g at ε′ + 2ε″ + ε‴ = 0.19 is {g:.6}"));
}

#[test]
fn criterion_06a_counterexample_values() {
    let c = verify::counterexample_checks();
    conclude("6a", &[c], "d ∈ {2, 4, 8}");
}

#[test]
fn criterion_06b_reversed_rule_violated_at_d8() {
    let rep = counterexample_report(8, default_h(), None).unwrap();
    let detail = format!(
        "gap H_min(AB|CC′) − H_min(A|BCC′) − H_min(B|CC′) = {:.6} vs h = 4f(0.3) = {:.6}",
        rep.gap.to_f64(),
        rep.h
    );
    report("6b", rep.reversed_rule_violated, &detail);
    assert!(rep.reversed_rule_violated, "criterion 6b: {detail}");
}

#[test]
fn criterion_07_lemma1_bound() {
    conclude("7", &[verify::lemma1_order(100, SEED)], "(ε, ε′) = (0.1, 0.1)");
}

#[test]
fn criterion_08_lemma4_lemma5() {
    let mut checks = verify::lemma4(100, SEED);
    checks.extend(verify::lemma5(100, SEED));
    conclude("8", &checks, "");
}

#[test]
fn criterion_09_lemma6() {
    conclude("9", &[verify::lemma6(200, SEED)], "");
}

#[test]
fn criterion_10_appendix_operator_inequalities() {
    let checks = [
        verify::audenaert(500, SEED),
        verify::triangle_inequality(500, SEED),
        verify::fidelity_monotonicity(500, SEED),
        verify::projection_monotonicity(500, SEED),
        verify::projection_bound(500, SEED),
    ];
    conclude("10", &checks, "");
}
