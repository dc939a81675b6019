use rand::{Rng, RngCore};

use super::operator::layout;
use super::{check_rng, CheckResult, Tally};
use crate::chain::{
    counterexample_report, default_h, error_g, evaluate_all, random_campaign, CampaignConfig, CampaignResult,
    RuleRecord, RuleStatus, SmoothingParams, Tripartite, SLACK_TOL,
};
use crate::entropy::Bits;
use crate::error::Result;
use crate::operator::{purify_with, random_state};

const SUITE: &str = "chain";
const DUALITY_TOL: f64 = 4e-5;
const COUNTEREXAMPLE_TOL: f64 = 1e-4;

/// Smoothing parameters of the random campaign.
pub fn campaign_params() -> SmoothingParams {
    SmoothingParams::new(0.3, 0.05, 0.05, 0.05).expect("valid parameters")
}

/// g(0, 0, 0, 1) = 4 and g < 6 whenever ε′ + 2ε″ + ε‴ = 0.19.
pub fn g_constant_checks() -> Vec<CheckResult> {
    let mut four = Tally::new(SUITE, "g-nonsmooth-constant", 1e-9);
    four.guard(String::new, |t| {
        let g = error_g(&SmoothingParams::new(0.5, 0.0, 0.0, 0.0)?, 1.0)?;
        t.record_eq(g.to_f64(), 4.0, || format!("g = {g:?}"));
        Ok(())
    });
    let mut six = Tally::new(SUITE, "g-below-six", 0.0);
    for (e1, e2, e3) in [(0.19, 0.0, 0.0), (0.0, 0.095, 0.0), (0.0, 0.0, 0.19), (0.05, 0.05, 0.04)] {
        six.guard(|| format!("({e1}, {e2}, {e3})"), |t| {
            let g = error_g(&SmoothingParams::new(0.5, e1, e2, e3)?, 1.0)?;
            t.record_bool(g.to_f64() < 6.0, || format!("({e1}, {e2}, {e3}): g = {g:?}"));
            Ok(())
        });
    }
    vec![four.finish(), six.finish()]
}

/// Oriented slack ≥ −2e-4; skipped or failed evaluations count against the check.
fn record_rule(t: &mut Tally, r: &RuleRecord, context: impl Fn() -> String) {
    match (r.status, r.slack) {
        (RuleStatus::Error, _) => {
            t.error(&crate::Error::Precondition(r.error.clone().unwrap_or_default()), || format!("{} {}", context(), r.rule_id))
        }
        (RuleStatus::Skipped, _) => t.record_bool(false, || {
            format!("{} {} skipped: {}", context(), r.rule_id, r.skipped_reason.clone().unwrap_or_default())
        }),
        (_, Some(Bits::Finite(s))) => t.record(-s, || format!("{} {}", context(), r.rule_id)),
        (_, Some(Bits::PosInf)) => t.record_bool(true, String::new),
        _ => t.record_bool(false, || format!("{} {}: slack {:?}", context(), r.rule_id, r.slack)),
    }
}

/// All eight rules and the non-smooth corollary on a finished campaign.
pub fn campaign_checks_from(result: &CampaignResult) -> Vec<CheckResult> {
    let mut rules = Tally::new(SUITE, "chain-rules-hold", -SLACK_TOL);
    let mut cor = Tally::new(SUITE, "nonsmooth-corollary", -SLACK_TOL);
    for rep in &result.reports {
        let ctx = || format!("seed {}", rep.state.seed.unwrap_or_default());
        for r in &rep.rules {
            record_rule(&mut rules, r, ctx);
        }
        record_rule(&mut cor, &rep.nonsmooth_corollary, ctx);
    }
    vec![rules.finish(), cor.finish()]
}

/// Random 2⊗2⊗2 campaign at (0.3, 0.05, 0.05, 0.05) with ranks cycling through 1, 2, 4, 8.
pub fn campaign_checks(count: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let cfg = CampaignConfig::qubits(count, campaign_params(), seed);
    Ok(campaign_checks_from(&random_campaign(&cfg)?))
}

/// Rule kb on ρ_ABC and rule ka on ρ_BAD of a purification have equal slack.
pub fn pair_duality(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "pair-duality", DUALITY_TOL);
    let mut r = check_rng(seed, "pair-duality");
    let l = layout(&[("A", 2), ("B", 2), ("C", 2)]);
    let p = campaign_params();
    for k in 0..trials {
        let rank = r.random_range(1..=2);
        let s = r.next_u64();
        t.guard(|| format!("trial {k}"), |t| {
            let rho = random_state(&l, rank, s)?;
            let psi = purify_with(&rho, "D", 0)?.density();
            let rep = evaluate_all(&rho, &Tripartite::parse("A|B|C")?, &p)?;
            let dual = evaluate_all(&psi, &Tripartite::parse("B|A|D")?, &p)?;
            for (kb, ka) in [("1b", "1a"), ("2b", "2a"), ("3b", "3a"), ("4b", "4a")] {
                let sx = rep.rule(kb).and_then(|x| x.slack).map(|b| b.to_f64());
                let sy = dual.rule(ka).and_then(|x| x.slack).map(|b| b.to_f64());
                match (sx, sy) {
                    (Some(a), Some(b)) => t.record_eq(a, b, || format!("trial {k}, {kb} vs {ka}")),
                    _ => t.record_bool(false, || format!("trial {k}, {kb} vs {ka}: missing slack")),
                }
            }
            Ok(())
        });
    }
    t.finish()
}

/// Counterexample values for d ∈ {2, 4, 8} against the classical-register formulas.
pub fn counterexample_checks() -> CheckResult {
    let mut t = Tally::new(SUITE, "counterexample", COUNTEREXAMPLE_TOL);
    for d in [2usize, 4, 8] {
        t.guard(|| format!("d = {d}"), |t| {
            let rep = counterexample_report(d, default_h(), None)?;
            let joint = rep.hmin_ab_given_ccp.combined.to_f64();
            let a = rep.hmin_a_given_bccp.combined.to_f64();
            t.record(joint.abs(), || format!("d = {d}: H_min(AB|CC′) = {joint}"));
            t.record_eq(a, rep.exact_formula, || format!("d = {d}: H_min(A|BCC′) = {a}"));
            t.record((a - rep.approximation).abs() - 1.0, || format!("d = {d}: H_min(A|BCC′) = {a} not within ±1 of −log d"));
            let floor = 2.0 * (d as f64).log2() - 2.0;
            t.record(floor - rep.gap.to_f64(), || format!("d = {d}: gap {:?} below 2 log d − 2", rep.gap));
            Ok(())
        });
    }
    t.finish()
}
