//! Randomized invariant suites, seeded and deterministic.
//!
//! Every check draws its instances from a generator derived from the suite seed and the
//! check name, so that individual checks reproduce in isolation.

mod chain;
mod entropy;
mod operator;
mod sdp;
mod smoothing;

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::random::rng;

pub use chain::{
    campaign_checks, campaign_checks_from, campaign_params, counterexample_checks, g_constant_checks, pair_duality,
};
pub use entropy::{
    hmax_grid, hmax_zero_gap, lemma6, nonsmooth_duality, nonsmooth_order, route_equivalence,
};
pub use operator::{
    audenaert, eig_reconstruction, fidelity_monotonicity, matching_extension_check, projection_bound,
    projection_monotonicity, realify_spectrum, triangle_inequality,
};
pub use sdp::{determinism, iterate_weak_duality, program_gap, slater_probes};
pub use smoothing::{eps_monotonicity, lemma1_order, lemma4, lemma5, smooth_duality};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Operator,
    Sdp,
    Entropy,
    Smoothing,
    Chain,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Operator => "operator",
            Suite::Sdp => "sdp",
            Suite::Entropy => "entropy",
            Suite::Smoothing => "smoothing",
            Suite::Chain => "chain",
        }
    }

    fn members(&self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Operator, Suite::Sdp, Suite::Entropy, Suite::Smoothing, Suite::Chain],
            s => vec![*s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "operator" => Suite::Operator,
            "sdp" => Suite::Sdp,
            "entropy" => Suite::Entropy,
            "smoothing" => Suite::Smoothing,
            "chain" => Suite::Chain,
            other => return Err(Error::invalid(format!("unknown suite `{other}`"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Multiplier on the default trial counts; every check runs at least one trial.
    pub scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, scale: 1.0 }
    }
}

impl VerifyOptions {
    fn trials(&self, default: usize) -> usize {
        ((default as f64 * self.scale).round() as usize).max(1)
    }
}

/// Outcome of one invariant over its trials.
///
/// Each trial yields an error measure (for an inequality a ≤ b, the excess a − b); a trial
/// violates the invariant when its measure exceeds `tolerance` or is not a number.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Trials that raised an error instead of producing a measure.
    pub errors: usize,
    pub tolerance: f64,
    /// Largest measure seen; `None` when no trial produced one.
    pub max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub failed_checks: usize,
    pub passed: bool,
}

/// Accumulates trial measures into a [`CheckResult`].
pub(crate) struct Tally {
    suite: &'static str,
    name: &'static str,
    tolerance: f64,
    trials: usize,
    violations: usize,
    errors: usize,
    max_error: Option<f64>,
    first_failure: Option<String>,
}

impl Tally {
    pub fn new(suite: &'static str, name: &'static str, tolerance: f64) -> Self {
        Tally { suite, name, tolerance, trials: 0, violations: 0, errors: 0, max_error: None, first_failure: None }
    }

    pub fn record(&mut self, measure: f64, context: impl FnOnce() -> String) {
        self.trials += 1;
        if !measure.is_nan() {
            self.max_error = Some(self.max_error.map_or(measure, |m| m.max(measure)));
        }
        if !(measure <= self.tolerance) {
            self.violations += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(format!("{} (measure {measure:.3e})", context()));
            }
        }
    }

    /// Records `a ≤ b`, i.e. the measure a − b.
    pub fn record_le(&mut self, a: f64, b: f64, context: impl FnOnce() -> String) {
        self.record(a - b, context)
    }

    pub fn record_eq(&mut self, a: f64, b: f64, context: impl FnOnce() -> String) {
        self.record((a - b).abs(), context)
    }

    pub fn record_bool(&mut self, ok: bool, context: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { f64::INFINITY }, context)
    }

    pub fn error(&mut self, e: &Error, context: impl FnOnce() -> String) {
        self.trials += 1;
        self.errors += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(format!("{}: {e}", context()));
        }
    }

    /// Runs `f` and records the error if it fails.
    pub fn guard(&mut self, context: impl Fn() -> String, f: impl FnOnce(&mut Tally) -> Result<()>) {
        if let Err(e) = f(self) {
            self.error(&e, context);
        }
    }

    pub fn finish(self) -> CheckResult {
        CheckResult {
            suite: self.suite.into(),
            name: self.name.into(),
            trials: self.trials,
            violations: self.violations,
            errors: self.errors,
            tolerance: self.tolerance,
            max_error: self.max_error,
            first_failure: self.first_failure,
            passed: self.violations == 0 && self.errors == 0 && self.trials > 0,
        }
    }
}

/// Generator for one check, derived from the suite seed and the check name (FNV-1a).
pub(crate) fn check_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    rng(seed ^ h)
}

fn suite_checks(suite: Suite, o: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let s = o.seed;
    Ok(match suite {
        Suite::Operator => vec![
            fidelity_monotonicity(o.trials(500), s),
            triangle_inequality(o.trials(500), s),
            projection_monotonicity(o.trials(500), s),
            projection_bound(o.trials(500), s),
            audenaert(o.trials(500), s),
            eig_reconstruction(o.trials(100), s),
            realify_spectrum(o.trials(100), s),
            matching_extension_check(o.trials(100), s),
        ],
        Suite::Sdp => vec![
            iterate_weak_duality(o.trials(20), s),
            program_gap(o.trials(50), s),
            slater_probes(o.trials(50), s),
            determinism(o.trials(5), s),
        ],
        Suite::Entropy => vec![
            hmax_zero_gap(o.trials(50), s),
            nonsmooth_order(o.trials(100), s),
            nonsmooth_duality(o.trials(50), s),
            route_equivalence(o.trials(50), s),
            hmax_grid(o.trials(20), s),
            lemma6(o.trials(200), s),
        ],
        Suite::Smoothing => {
            let mut v = smooth_duality(o.trials(50), s);
            v.push(lemma1_order(o.trials(100), s));
            v.push(eps_monotonicity(o.trials(5), s));
            v.extend(lemma4(o.trials(100), s));
            v.extend(lemma5(o.trials(100), s));
            v
        }
        Suite::Chain => {
            let mut v = g_constant_checks();
            v.extend(campaign_checks(o.trials(50), s)?);
            v.push(pair_duality(o.trials(3), s));
            v.push(counterexample_checks());
            v
        }
        Suite::All => unreachable!("expanded by run_suite"),
    })
}

/// Runs every check of `suite` (all suites for [`Suite::All`]).
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    if !(opts.scale > 0.0 && opts.scale.is_finite()) {
        return Err(Error::invalid(format!("trial scale {} must be positive", opts.scale)));
    }
    let mut checks = Vec::new();
    for s in suite.members() {
        checks.extend(suite_checks(s, opts)?);
    }
    let failed_checks = checks.iter().filter(|c| !c.passed).count();
    Ok(VerifyReport { suite, seed: opts.seed, checks, failed_checks, passed: failed_checks == 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::All, Suite::Operator, Suite::Sdp, Suite::Entropy, Suite::Smoothing, Suite::Chain] {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn tally_counts_nan_and_excess() {
        let mut t = Tally::new("x", "y", 1e-6);
        t.record(0.0, String::new);
        t.record(f64::NAN, || "nan".into());
        t.record(1.0, || "big".into());
        let r = t.finish();
        assert_eq!((r.trials, r.violations), (3, 2));
        assert_eq!(r.max_error, Some(1.0));
        assert!(r.first_failure.unwrap().starts_with("nan"));
        assert!(!r.passed);
    }

    #[test]
    fn quick_operator_suite_passes_and_reproduces() {
        let o = VerifyOptions { seed: 7, scale: 0.05 };
        let a = run_suite(Suite::Operator, &o).unwrap();
        let b = run_suite(Suite::Operator, &o).unwrap();
        assert!(a.passed, "{:#?}", a.checks);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
