use rand::Rng;

use super::entropy::finite;
use super::operator::{any_rank_state, layout};
use super::{check_rng, CheckResult, Tally};
use crate::entropy::Bits;
use crate::operator::random::random_pure_with;
use crate::operator::Split;
use crate::smoothing::{lemma4_construct, lemma5_construct, smooth_hmax, smooth_hmin, SmoothedResult};

const SUITE: &str = "smoothing";
const DUALITY_EPS: [f64; 3] = [0.0, 0.05, 0.1];
const MONOTONE_EPS: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];
const DISTANCE_TOL: f64 = 1e-7;
const BOUND_TOL: f64 = 1e-5;

fn split(text: &str) -> Split {
    Split::parse(text).expect("fixed split")
}

/// Records lhs ≤ rhs on extended reals.
fn record_bits_le(t: &mut Tally, lhs: Bits, rhs: Bits, context: impl FnOnce() -> String) {
    match (lhs, rhs) {
        (Bits::Finite(a), Bits::Finite(b)) => t.record_le(a, b, context),
        (Bits::NegInf, _) | (_, Bits::PosInf) => t.record_bool(true, context),
        _ => t.record_bool(false, context),
    }
}

fn admissible(t: &mut Tally, r: &SmoothedResult, context: impl FnOnce() -> String) {
    let over_trace = r.witness.trace() - 1.0;
    t.record((r.distance - r.epsilon).max(over_trace), context)
}

/// H^ε_max(A|B) + H^ε_min(A|C) = 0 on pure ρ_ABC, plus witness admissibility of both sides.
pub fn smooth_duality(trials: usize, seed: u64) -> Vec<CheckResult> {
    let mut t = Tally::new(SUITE, "smooth-duality", 2e-5);
    let mut w = Tally::new(SUITE, "witness-admissibility", DISTANCE_TOL);
    let mut r = check_rng(seed, "smooth-duality");
    let l = layout(&[("A", 2), ("B", 2), ("C", 2)]);
    let (ab, ac) = (split("A|B"), split("A|C"));
    for k in 0..trials {
        let psi = match random_pure_with(&l, &mut r) {
            Ok(p) => p.density(),
            Err(e) => {
                t.error(&e, || format!("trial {k}"));
                continue;
            }
        };
        for eps in DUALITY_EPS {
            t.guard(|| format!("trial {k}, ε = {eps}"), |t| {
                let hx = smooth_hmax(&psi, &ab, eps)?;
                let hn = smooth_hmin(&psi, &ac, eps)?;
                let sum = finite(hx.value.bits, "H^ε_max")? + finite(hn.value.bits, "H^ε_min")?;
                t.record(sum.abs(), || format!("trial {k}, ε = {eps}"));
                admissible(&mut w, &hx, || format!("trial {k}, ε = {eps}, max side"));
                admissible(&mut w, &hn, || format!("trial {k}, ε = {eps}, min side"));
                Ok(())
            });
        }
    }
    vec![t.finish(), w.finish()]
}

/// H^{ε′}_min(A|B) ≤ H^ε_max(A|B) + log 1/(1 − (ε + ε′)²) at ε = ε′ = 0.1 on normalized 2⊗2 states.
pub fn lemma1_order(trials: usize, seed: u64) -> CheckResult {
    let (eps, eps1): (f64, f64) = (0.1, 0.1);
    let correction = -(1.0 - (eps + eps1) * (eps + eps1)).log2();
    let mut t = Tally::new(SUITE, "lemma1-smooth-order", 2e-5);
    let mut r = check_rng(seed, "lemma1-smooth-order");
    let l = layout(&[("A", 2), ("B", 2)]);
    let ab = split("A|B");
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let rho = any_rank_state(&l, &mut r)?;
            let lo = smooth_hmin(&rho, &ab, eps1)?.value.bits;
            let hi = smooth_hmax(&rho, &ab, eps)?.value.bits.shift(correction);
            record_bits_le(t, lo, hi, || format!("trial {k}"));
            Ok(())
        });
    }
    t.finish()
}

/// Along a grid of radii, H^ε_min is nondecreasing and H^ε_max nonincreasing.
pub fn eps_monotonicity(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "eps-monotonicity", 2e-5);
    let mut r = check_rng(seed, "eps-monotonicity");
    let l = layout(&[("A", 2), ("B", 2)]);
    let ab = split("A|B");
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let rho = any_rank_state(&l, &mut r)?;
            let mut prev: Option<(Bits, Bits)> = None;
            for eps in MONOTONE_EPS {
                let lo = smooth_hmin(&rho, &ab, eps)?.value.bits;
                let hi = smooth_hmax(&rho, &ab, eps)?.value.bits;
                if let Some((plo, phi)) = prev {
                    record_bits_le(t, plo, lo, || format!("trial {k}, H_min at ε = {eps}"));
                    record_bits_le(t, hi, phi, || format!("trial {k}, H_max at ε = {eps}"));
                }
                prev = Some((lo, hi));
            }
            Ok(())
        });
    }
    t.finish()
}

/// Relative max-entropy smoothing on random ρ, ρ′ (2⊗2): entropy and distance bounds.
pub fn lemma4(trials: usize, seed: u64) -> Vec<CheckResult> {
    let mut b = Tally::new(SUITE, "lemma4-entropy-bound", BOUND_TOL);
    let mut d = Tally::new(SUITE, "lemma4-distance-bound", DISTANCE_TOL);
    let mut r = check_rng(seed, "lemma4");
    let l = layout(&[("A", 2), ("B", 2)]);
    let ab = split("A|B");
    for k in 0..trials {
        let eps = r.random_range(0.05..0.6);
        let inst = any_rank_state(&l, &mut r)
            .and_then(|rho| Ok((rho, any_rank_state(&l, &mut r)?)))
            .and_then(|(rho, rp)| lemma4_construct(&rho, &rp, &ab, eps));
        match inst {
            Ok((_, rep)) => {
                record_bits_le(&mut b, rep.hmax_tilde, rep.hmax_rel.shift(rep.f), || format!("trial {k}, ε = {eps}"));
                d.record_le(rep.distance, eps + rep.eps_prime, || format!("trial {k}, ε = {eps}"));
            }
            Err(e) => {
                b.error(&e, || format!("trial {k}"));
                d.error(&e, || format!("trial {k}"));
            }
        }
    }
    vec![b.finish(), d.finish()]
}

/// Min-entropy smoothing on random pure 2⊗2⊗2 states: entropy and distance bounds.
pub fn lemma5(trials: usize, seed: u64) -> Vec<CheckResult> {
    let mut b = Tally::new(SUITE, "lemma5-entropy-bound", BOUND_TOL);
    let mut d = Tally::new(SUITE, "lemma5-distance-bound", DISTANCE_TOL);
    let mut r = check_rng(seed, "lemma5");
    let l = layout(&[("A", 2), ("B", 2), ("C", 2)]);
    let ab = split("A|B");
    for k in 0..trials {
        let eps = r.random_range(0.05..0.6);
        let inst = random_pure_with(&l, &mut r).and_then(|psi| lemma5_construct(&psi.density(), &ab, eps));
        match inst {
            Ok((_, _, _, rep)) => {
                record_bits_le(&mut b, rep.hmin, rep.hmin_tilde_rel.shift(rep.f), || format!("trial {k}, ε = {eps}"));
                d.record_le(rep.distance, eps, || format!("trial {k}, ε = {eps}"));
            }
            Err(e) => {
                b.error(&e, || format!("trial {k}"));
                d.error(&e, || format!("trial {k}"));
            }
        }
    }
    vec![b.finish(), d.finish()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_checks_pass_on_small_runs() {
        let mut all = smooth_duality(2, 11);
        all.push(lemma1_order(2, 11));
        all.push(eps_monotonicity(1, 11));
        all.extend(lemma4(5, 11));
        all.extend(lemma5(5, 11));
        for c in all {
            assert!(c.passed, "{c:#?}");
        }
    }
}
