use std::collections::BTreeMap;

use serde::Serialize;

use super::terms::{error_f, error_g, SmoothingParams};
use crate::entropy::Bits;
use crate::error::{Error, Result};
use crate::operator::{QuantumState, Split};
use crate::smoothing::{smooth_hmax, smooth_hmin};

/// Oriented slack below which an inequality counts as violated.
pub const SLACK_TOL: f64 = -2e-4;

/// Three disjoint groups of systems for chain rules on AB|C.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tripartite {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
}

impl Tripartite {
    pub fn new(a: Vec<String>, b: Vec<String>, c: Vec<String>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::invalid("chain rules need non-empty A and B"));
        }
        // duplicate detection through a throwaway split
        Split::new(a.iter().chain(&b).cloned().collect::<Vec<_>>(), c.clone())?;
        Ok(Tripartite { a, b, c })
    }

    /// Parse `A|B|C` (sides as in [`Split::parse`]).
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split('|').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("`{text}` is not of the form A|B|C")));
        }
        let side = crate::operator::parse_labels;
        Tripartite::new(side(parts[0])?, side(parts[1])?, side(parts[2])?)
    }

    fn concat(x: &[String], y: &[String]) -> Vec<String> {
        x.iter().chain(y).cloned().collect()
    }

    pub fn ab_c(&self) -> Split {
        Split { a: Self::concat(&self.a, &self.b), b: self.c.clone() }
    }

    pub fn a_bc(&self) -> Split {
        Split { a: self.a.clone(), b: Self::concat(&self.b, &self.c) }
    }

    pub fn b_c(&self) -> Split {
        Split { a: self.b.clone(), b: self.c.clone() }
    }
}

impl std::fmt::Display for Tripartite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ab = Split { a: self.a.clone(), b: self.b.clone() }.to_string();
        let c = Split { a: self.b.clone(), b: self.c.clone() }.to_string();
        let c = c.split_once('|').map(|(_, r)| r.to_string()).unwrap_or_default();
        write!(f, "{ab}|{c}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    Hmin,
    Hmax,
}

/// One smooth entropy entering a rule.
#[derive(Clone, Debug, Serialize)]
pub struct TermValue {
    pub kind: TermKind,
    pub split: String,
    pub eps: f64,
    pub bits: Option<Bits>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Memo of smooth entropies of one state keyed by (kind, split, ε).
#[derive(Default)]
pub struct TermCache {
    map: BTreeMap<(TermKind, String, u64), std::result::Result<Bits, String>>,
}

impl TermCache {
    pub fn get(&mut self, rho: &QuantumState, kind: TermKind, split: &Split, eps: f64) -> TermValue {
        let key = (kind, split.to_string(), eps.to_bits());
        let value = self
            .map
            .entry(key)
            .or_insert_with(|| {
                let r = match kind {
                    TermKind::Hmin => smooth_hmin(rho, split, eps),
                    TermKind::Hmax => smooth_hmax(rho, split, eps),
                };
                r.map(|s| s.value.bits).map_err(|e| e.to_string())
            })
            .clone();
        let (bits, error) = match value {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e)),
        };
        TermValue { kind, split: split.to_string(), eps, bits, error }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// lhs ≥ rhs
    #[serde(rename = ">=")]
    Ge,
    /// lhs ≤ rhs
    #[serde(rename = "<=")]
    Le,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleStatus {
    Holds,
    Violated,
    Skipped,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleRecord {
    pub rule_id: String,
    pub orientation: Orientation,
    pub status: RuleStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<Bits>,
    /// Sum of the right-hand terms plus the signed correction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Bits>,
    /// rhs − lhs for ≤ and lhs − rhs for ≥.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<Bits>,
    /// Signed error term added to the right-hand side (−f for lower bounds, ...).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<Bits>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub terms: Vec<TermValue>,
}

impl RuleRecord {
    pub fn holds(&self) -> Option<bool> {
        match self.status {
            RuleStatus::Holds => Some(true),
            RuleStatus::Violated => Some(false),
            _ => None,
        }
    }

    fn skipped(id: &str, orientation: Orientation, reason: String) -> Self {
        RuleRecord {
            rule_id: id.into(),
            orientation,
            status: RuleStatus::Skipped,
            lhs: None,
            rhs: None,
            slack: None,
            correction: None,
            skipped_reason: Some(reason),
            error: None,
            terms: Vec::new(),
        }
    }
}

/// Description of the evaluated state.
#[derive(Clone, Debug, Serialize)]
pub struct StateDescriptor {
    pub systems: String,
    pub dims: Vec<usize>,
    pub trace: f64,
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl StateDescriptor {
    pub fn of(rho: &QuantumState, systems: &Tripartite, seed: Option<u64>) -> Self {
        StateDescriptor {
            systems: systems.to_string(),
            dims: rho.layout().dims(),
            trace: rho.trace(),
            rank: rho.op().rank(),
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainRuleReport {
    pub state: StateDescriptor,
    pub params: SmoothingParams,
    pub tolerance: f64,
    /// Rules 1a–4b.
    pub rules: Vec<RuleRecord>,
    /// H_min(AB|C) ≤ H_max(A|BC) + H_max(B|C) + g(0, 0, 0, tr ρ).
    pub nonsmooth_corollary: RuleRecord,
}

/// Row of the flat CSV export.
#[derive(Clone, Debug, Serialize)]
pub struct CsvRow {
    pub rule_id: String,
    pub lhs: String,
    pub rhs: String,
    pub slack: String,
    pub holds: String,
    pub skipped_reason: String,
    pub seed: String,
    pub dims: String,
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

fn fmt_bits(b: &Option<Bits>) -> String {
    match b {
        Some(Bits::Finite(v)) => format!("{v:.6}"),
        Some(other) => other.to_string(),
        None => String::new(),
    }
}

impl ChainRuleReport {
    pub fn all_records(&self) -> impl Iterator<Item = &RuleRecord> {
        self.rules.iter().chain(std::iter::once(&self.nonsmooth_corollary))
    }

    pub fn rule(&self, id: &str) -> Option<&RuleRecord> {
        self.all_records().find(|r| r.rule_id == id)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let dims = self.state.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        self.all_records()
            .map(|r| CsvRow {
                rule_id: r.rule_id.clone(),
                lhs: fmt_bits(&r.lhs),
                rhs: fmt_bits(&r.rhs),
                slack: fmt_bits(&r.slack),
                holds: r.holds().map(|h| h.to_string()).unwrap_or_default(),
                skipped_reason: r.skipped_reason.clone().or_else(|| r.error.clone()).unwrap_or_default(),
                seed: self.state.seed.map(|s| s.to_string()).unwrap_or_default(),
                dims: dims.clone(),
                eps: self.params.eps,
                eps1: self.params.eps1,
                eps2: self.params.eps2,
                eps3: self.params.eps3,
            })
            .collect()
    }
}

/// Writes the CSV rows of several reports to `w`, header first.
pub fn write_csv<W: std::io::Write>(reports: &[ChainRuleReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut wrote = false;
    for r in reports {
        for row in r.csv_rows() {
            out.serialize(row)?;
            wrote = true;
        }
    }
    if !wrote {
        out.write_record([
            "rule_id", "lhs", "rhs", "slack", "holds", "skipped_reason", "seed", "dims", "eps", "eps1", "eps2", "eps3",
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Sum of Bits; None when +∞ meets −∞.
fn add_bits(x: Bits, y: Bits) -> Option<Bits> {
    match (x, y) {
        (Bits::Finite(a), Bits::Finite(b)) => Some(Bits::Finite(a + b)),
        (Bits::PosInf, Bits::NegInf) | (Bits::NegInf, Bits::PosInf) => None,
        (Bits::Finite(_), inf) | (inf, Bits::Finite(_)) => Some(inf),
        (same, _) => Some(same),
    }
}

struct Spec<'a> {
    id: &'a str,
    orientation: Orientation,
    lhs: (TermKind, Split, f64),
    rhs: [(TermKind, Split, f64); 2],
    correction: Bits,
}

fn evaluate(rho: &QuantumState, cache: &mut TermCache, spec: Spec<'_>) -> RuleRecord {
    let lhs = cache.get(rho, spec.lhs.0, &spec.lhs.1, spec.lhs.2);
    let r0 = cache.get(rho, spec.rhs[0].0, &spec.rhs[0].1, spec.rhs[0].2);
    let r1 = cache.get(rho, spec.rhs[1].0, &spec.rhs[1].1, spec.rhs[1].2);
    let terms = vec![lhs, r0, r1];
    let mut rec = RuleRecord {
        rule_id: spec.id.into(),
        orientation: spec.orientation,
        status: RuleStatus::Error,
        lhs: None,
        rhs: None,
        slack: None,
        correction: Some(spec.correction),
        skipped_reason: None,
        error: None,
        terms: Vec::new(),
    };
    if let Some(e) = terms.iter().find_map(|t| t.error.clone()) {
        rec.error = Some(e);
        rec.terms = terms;
        return rec;
    }
    let v: Vec<Bits> = terms.iter().map(|t| t.bits.expect("value present")).collect();
    let rhs = add_bits(v[1], v[2]).and_then(|s| add_bits(s, spec.correction));
    let slack = rhs.and_then(|r| match spec.orientation {
        Orientation::Ge => add_bits(v[0], r.neg()),
        Orientation::Le => add_bits(r, v[0].neg()),
    });
    rec.lhs = Some(v[0]);
    rec.rhs = rhs;
    rec.terms = terms;
    match slack {
        Some(s) => {
            rec.slack = Some(s);
            rec.status = if s >= Bits::Finite(SLACK_TOL) { RuleStatus::Holds } else { RuleStatus::Violated };
        }
        None => rec.error = Some("indeterminate ∞ − ∞".into()),
    }
    rec
}

/// Evaluates the eight chain inequalities and the non-smooth corollary on ρ.
///
/// With E = ε and e = ε − ε′ − 2ε″, rules 1 and 2 use f(e) and rule 3 uses f(e/2), so that the
/// largest smoothing radius is E in every rule.
pub fn evaluate_all(rho: &QuantumState, systems: &Tripartite, params: &SmoothingParams) -> Result<ChainRuleReport> {
    evaluate_all_with(rho, systems, params, None, &mut TermCache::default())
}

pub fn evaluate_all_with(
    rho: &QuantumState,
    systems: &Tripartite,
    params: &SmoothingParams,
    seed: Option<u64>,
    cache: &mut TermCache,
) -> Result<ChainRuleReport> {
    params.validate()?;
    Split { a: Tripartite::concat(&systems.a, &systems.b), b: systems.c.clone() }.check(rho.layout())?;
    if rho.trace() > 1.0 + 1e-9 {
        return Err(Error::InvalidState(format!("chain rules need tr ρ ≤ 1, got {}", rho.trace())));
    }
    let SmoothingParams { eps: big, eps1: e1, eps2: e2, eps3: e3 } = *params;
    let (ab_c, a_bc, b_c) = (systems.ab_c(), systems.a_bc(), systems.b_c());
    use Orientation::{Ge, Le};
    use TermKind::{Hmax, Hmin};

    let mut rules = Vec::new();
    let e = big - e1 - 2.0 * e2;
    if e > 0.0 {
        let f = error_f(e)?;
        let f3 = error_f(e / 2.0)?;
        let specs = [
            Spec { id: "1a", orientation: Ge, lhs: (Hmin, ab_c.clone(), big), rhs: [(Hmin, a_bc.clone(), e2), (Hmin, b_c.clone(), e1)], correction: Bits::Finite(-f) },
            Spec { id: "1b", orientation: Le, lhs: (Hmax, ab_c.clone(), big), rhs: [(Hmax, a_bc.clone(), e1), (Hmax, b_c.clone(), e2)], correction: Bits::Finite(f) },
            Spec { id: "2a", orientation: Le, lhs: (Hmin, ab_c.clone(), e1), rhs: [(Hmin, a_bc.clone(), big), (Hmax, b_c.clone(), e2)], correction: Bits::Finite(2.0 * f) },
            Spec { id: "2b", orientation: Ge, lhs: (Hmax, ab_c.clone(), e1), rhs: [(Hmin, a_bc.clone(), e2), (Hmax, b_c.clone(), big)], correction: Bits::Finite(-2.0 * f) },
            Spec { id: "3a", orientation: Le, lhs: (Hmin, ab_c.clone(), e1), rhs: [(Hmax, a_bc.clone(), e2), (Hmin, b_c.clone(), big)], correction: Bits::Finite(3.0 * f3) },
            Spec { id: "3b", orientation: Ge, lhs: (Hmax, ab_c.clone(), e1), rhs: [(Hmax, a_bc.clone(), big), (Hmin, b_c.clone(), e2)], correction: Bits::Finite(-3.0 * f3) },
        ];
        for s in specs {
            rules.push(evaluate(rho, cache, s));
        }
    } else {
        let reason = format!("side condition ε > ε′ + 2ε″ fails ({big} ≤ {e1} + 2·{e2})");
        for (id, o) in [("1a", Ge), ("1b", Le), ("2a", Le), ("2b", Ge), ("3a", Le), ("3b", Ge)] {
            rules.push(RuleRecord::skipped(id, o, reason.clone()));
        }
    }

    let tr = rho.trace().min(1.0);
    let g = error_g(params, tr)?;
    if g.is_finite() {
        let specs = [
            Spec { id: "4a", orientation: Le, lhs: (Hmin, ab_c.clone(), e1), rhs: [(Hmax, a_bc.clone(), e3), (Hmax, b_c.clone(), e2)], correction: g },
            Spec { id: "4b", orientation: Ge, lhs: (Hmax, ab_c.clone(), e1), rhs: [(Hmin, a_bc.clone(), e2), (Hmin, b_c.clone(), e3)], correction: g.neg() },
        ];
        for s in specs {
            rules.push(evaluate(rho, cache, s));
        }
    } else {
        let reason = format!("side condition ε′ + 2ε″ + ε‴ < 1 − 2√(1 − tr ρ) fails (tr ρ = {tr})");
        rules.push(RuleRecord::skipped("4a", Le, reason.clone()));
        rules.push(RuleRecord::skipped("4b", Ge, reason));
    }

    let g0 = error_g(&SmoothingParams { eps: 0.5, eps1: 0.0, eps2: 0.0, eps3: 0.0 }, tr)?;
    let nonsmooth_corollary = if g0.is_finite() {
        evaluate(
            rho,
            cache,
            Spec { id: "4a-nonsmooth", orientation: Le, lhs: (Hmin, ab_c.clone(), 0.0), rhs: [(Hmax, a_bc, 0.0), (Hmax, b_c, 0.0)], correction: g0 },
        )
    } else {
        RuleRecord::skipped("4a-nonsmooth", Le, format!("g(0, 0, 0, {tr}) is infinite"))
    };

    Ok(ChainRuleReport {
        state: StateDescriptor::of(rho, systems, seed),
        params: *params,
        tolerance: SLACK_TOL,
        rules,
        nonsmooth_corollary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{purify_with, random_state, SystemLayout};

    fn abc() -> SystemLayout {
        SystemLayout::new([("A", 2), ("B", 2), ("C", 2)]).unwrap()
    }

    fn sys() -> Tripartite {
        Tripartite::parse("A|B|C").unwrap()
    }

    #[test]
    fn all_rules_hold_on_random_state() {
        let rho = random_state(&abc(), 2, 11).unwrap();
        let p = SmoothingParams::new(0.3, 0.05, 0.05, 0.05).unwrap();
        let mut cache = TermCache::default();
        let rep = evaluate_all_with(&rho, &sys(), &p, Some(11), &mut cache).unwrap();
        assert_eq!(rep.rules.len(), 8);
        for r in rep.all_records() {
            assert_eq!(r.status, RuleStatus::Holds, "{r:?}");
        }
        // 1a,2a,3a,4a share terms
        assert!(cache.len() < 24);
        let rows = rep.csv_rows();
        assert_eq!(rows.len(), 9);
        let mut buf = Vec::new();
        write_csv(&[rep], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rule_id,lhs,rhs,slack,holds,skipped_reason,seed,dims,eps,eps1,eps2,eps3"));
    }

    #[test]
    fn product_state_corollary() {
        let rho = crate::operator::QuantumState::maximally_mixed(abc());
        let p = SmoothingParams::new(0.3, 0.05, 0.05, 0.05).unwrap();
        let rep = evaluate_all(&rho, &sys(), &p).unwrap();
        let c = &rep.nonsmooth_corollary;
        assert!((c.lhs.unwrap().to_f64() - 2.0).abs() < 1e-5);
        assert!((c.rhs.unwrap().to_f64() - 6.0).abs() < 1e-5);
        assert_eq!(c.status, RuleStatus::Holds);
    }

    #[test]
    fn side_conditions_skip() {
        let rho = random_state(&abc(), 1, 2).unwrap();
        let p = SmoothingParams::new(0.1, 0.05, 0.05, 0.0).unwrap();
        let rep = evaluate_all(&rho, &sys(), &p).unwrap();
        let r = rep.rule("1a").unwrap();
        assert_eq!(r.status, RuleStatus::Skipped);
        assert!(r.skipped_reason.as_ref().unwrap().contains("ε > ε′ + 2ε″"));
        assert_eq!(rep.rule("4a").unwrap().status, RuleStatus::Holds);
        let p = SmoothingParams::new(0.5, 0.3, 0.3, 0.3).unwrap();
        let rep = evaluate_all(&rho, &sys(), &p).unwrap();
        assert_eq!(rep.rule("4b").unwrap().status, RuleStatus::Skipped);
    }

    #[test]
    fn paired_rules_agree_under_duality() {
        // rule 1a on ρ_BAD of the purification equals rule 1b on ρ_ABC up to sign
        let rho = random_state(&abc(), 2, 4).unwrap();
        let psi = purify_with(&rho, "D", 0).unwrap().density();
        let p = SmoothingParams::new(0.3, 0.05, 0.05, 0.05).unwrap();
        let rep = evaluate_all(&rho, &sys(), &p).unwrap();
        let dual = evaluate_all(&psi, &Tripartite::parse("B|A|D").unwrap(), &p).unwrap();
        for (k, kd) in [("1b", "1a"), ("2b", "2a"), ("3b", "3a"), ("4b", "4a")] {
            let (x, y) = (rep.rule(k).unwrap(), dual.rule(kd).unwrap());
            let sx = x.slack.unwrap().to_f64();
            let sy = y.slack.unwrap().to_f64();
            assert!((sx - sy).abs() < 4e-5, "{k}: {sx} vs {kd}: {sy}");
        }
    }

    #[test]
    fn tripartite_parsing() {
        let t = Tripartite::parse("A|B|C,C'").unwrap();
        assert_eq!(t.c, vec!["C".to_string(), "C'".to_string()]);
        assert_eq!(t.ab_c().to_string(), "AB|CC'");
        assert!(Tripartite::parse("A|B").is_err());
        assert!(Tripartite::parse("A|A|C").is_err());
    }
}
