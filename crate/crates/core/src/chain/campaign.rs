use std::collections::BTreeMap;

use rand::RngCore;
use serde::Serialize;

use super::rules::{evaluate_all_with, ChainRuleReport, RuleStatus, TermCache, Tripartite, SLACK_TOL};
use super::terms::SmoothingParams;
use crate::entropy::Bits;
use crate::error::{Error, Result};
use crate::operator::random::rng;
use crate::operator::{random_state, SystemLayout};

/// Largest total dimension accepted by a campaign (before purification).
pub const MAX_CAMPAIGN_DIM: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct CampaignConfig {
    /// Dimensions of A, B, C.
    pub dims: [usize; 3],
    pub count: usize,
    pub params: SmoothingParams,
    pub seed: u64,
    /// Ranks cycled across instances; the full dimension is used where a rank exceeds it.
    pub ranks: Vec<usize>,
}

impl CampaignConfig {
    /// 2⊗2⊗2 states with ranks cycling through 1, 2, 4, 8.
    pub fn qubits(count: usize, params: SmoothingParams, seed: u64) -> Self {
        CampaignConfig { dims: [2, 2, 2], count, params, seed, ranks: vec![1, 2, 4, 8] }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let total: usize = self.dims.iter().product();
        if self.dims.iter().any(|&d| d == 0) || total > MAX_CAMPAIGN_DIM {
            return Err(Error::invalid(format!("campaign dims {:?} exceed the desk-scale limit {MAX_CAMPAIGN_DIM}", self.dims)));
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return Err(Error::invalid("campaign ranks must be positive"));
        }
        Ok(())
    }

    fn layout(&self) -> Result<SystemLayout> {
        SystemLayout::new([("A", self.dims[0]), ("B", self.dims[1]), ("C", self.dims[2])])
    }

    /// Seeds of the individual instances, derived deterministically from `seed`.
    pub fn instance_seeds(&self) -> Vec<u64> {
        let mut r = rng(self.seed);
        (0..self.count).map(|_| r.next_u64()).collect()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RuleSummary {
    pub holds: usize,
    pub violated: usize,
    pub skipped: usize,
    pub errors: usize,
    pub min_slack: Option<Bits>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignSummary {
    pub instances: usize,
    pub tolerance: f64,
    pub per_rule: BTreeMap<String, RuleSummary>,
    pub failures: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub summary: CampaignSummary,
    pub reports: Vec<ChainRuleReport>,
}

pub fn summarize(reports: &[ChainRuleReport]) -> CampaignSummary {
    let mut per_rule: BTreeMap<String, RuleSummary> = BTreeMap::new();
    for rep in reports {
        for r in rep.all_records() {
            let s = per_rule.entry(r.rule_id.clone()).or_default();
            match r.status {
                RuleStatus::Holds => s.holds += 1,
                RuleStatus::Violated => s.violated += 1,
                RuleStatus::Skipped => s.skipped += 1,
                RuleStatus::Error => s.errors += 1,
            }
            if let Some(sl) = r.slack {
                if s.min_slack.map(|m| sl < m).unwrap_or(true) {
                    s.min_slack = Some(sl);
                }
            }
        }
    }
    CampaignSummary {
        instances: reports.len(),
        tolerance: SLACK_TOL,
        failures: per_rule.values().map(|s| s.violated).sum(),
        errors: per_rule.values().map(|s| s.errors).sum(),
        per_rule,
    }
}

/// Evaluates every rule on `count` random states; instance i uses rank `ranks[i % len]`.
pub fn random_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    config.validate()?;
    let layout = config.layout()?;
    let systems = Tripartite::parse("A|B|C")?;
    let mut reports = Vec::with_capacity(config.count);
    for (i, seed) in config.instance_seeds().into_iter().enumerate() {
        let rank = config.ranks[i % config.ranks.len()].min(layout.dim());
        let rho = random_state(&layout, rank, seed)?;
        let mut cache = TermCache::default();
        reports.push(evaluate_all_with(&rho, &systems, &config.params, Some(seed), &mut cache)?);
    }
    Ok(CampaignResult { config: config.clone(), summary: summarize(&reports), reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_campaign_is_reproducible() {
        let p = SmoothingParams::new(0.3, 0.05, 0.05, 0.05).unwrap();
        let mut cfg = CampaignConfig::qubits(3, p, 42);
        cfg.ranks = vec![1, 2];
        let a = random_campaign(&cfg).unwrap();
        let b = random_campaign(&cfg).unwrap();
        let (sa, sb) = (serde_json::to_string(&a.summary).unwrap(), serde_json::to_string(&b.summary).unwrap());
        assert_eq!(sa, sb);
        assert_eq!(a.summary.failures, 0);
        assert_eq!(a.summary.errors, 0);
        for s in a.summary.per_rule.values() {
            assert!(s.min_slack.unwrap() >= Bits::Finite(SLACK_TOL));
        }
    }

    #[test]
    fn oversized_campaign_rejected() {
        let p = SmoothingParams::new(0.3, 0.05, 0.05, 0.05).unwrap();
        let mut cfg = CampaignConfig::qubits(1, p, 1);
        cfg.dims = [3, 3, 2];
        assert!(random_campaign(&cfg).is_err());
    }
}
