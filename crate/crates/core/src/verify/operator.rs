use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_rng, CheckResult, Tally};
use crate::error::Result;
use crate::operator::random::{gaussian_matrix, random_projector, random_psd, random_state_with};
use crate::operator::{
    checked_eigenvalues, eig_h, fidelity, matching_extension, negative_projector, psd_power, purified_distance,
    HermitianOperator, QuantumState, SystemLayout, DEGENERACY_TOL,
};

const SUITE: &str = "operator";
const TOL: f64 = 1e-9;
const S_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub(crate) fn layout(spec: &[(&str, usize)]) -> SystemLayout {
    SystemLayout::new(spec.iter().map(|&(l, d)| (l, d))).expect("fixed layout")
}

/// Normalized state of uniformly random rank.
pub(crate) fn any_rank_state(l: &SystemLayout, r: &mut ChaCha8Rng) -> Result<QuantumState> {
    let rank = r.random_range(1..=l.dim());
    random_state_with(l, rank, r)
}

/// Random-rank state scaled by a trace in [0.5, 1].
fn subnormalized(l: &SystemLayout, r: &mut ChaCha8Rng) -> Result<QuantumState> {
    let rho = any_rank_state(l, r)?;
    let t = r.random_range(0.5..=1.0);
    rho.scaled(t)
}

fn random_hermitian_with(l: &SystemLayout, r: &mut ChaCha8Rng) -> Result<HermitianOperator> {
    let g = gaussian_matrix(l.dim(), l.dim(), r);
    HermitianOperator::new(l.clone(), (&g + g.adjoint()) * Complex64::new(0.5, 0.0))
}

fn small_layout(r: &mut ChaCha8Rng) -> SystemLayout {
    if r.random_bool(0.5) {
        layout(&[("A", 2), ("B", 2)])
    } else {
        layout(&[("A", 2), ("B", 3)])
    }
}

/// F(tr_C ρ, tr_C σ) ≥ F(ρ, σ).
pub fn fidelity_monotonicity(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "fidelity-monotonicity", TOL);
    let mut r = check_rng(seed, "fidelity-monotonicity");
    let l = layout(&[("A", 2), ("B", 2), ("C", 2)]);
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let rho = any_rank_state(&l, &mut r)?;
            let sigma = any_rank_state(&l, &mut r)?;
            let full = fidelity(&rho, &sigma)?;
            let reduced = fidelity(&rho.partial_trace(&["A", "B"])?, &sigma.partial_trace(&["A", "B"])?)?;
            t.record_le(full, reduced, || format!("trial {k}"));
            Ok(())
        });
    }
    t.finish()
}

/// P(ρ, τ) ≤ P(ρ, σ) + P(σ, τ) on sub-normalized triples.
pub fn triangle_inequality(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "purified-distance-triangle", TOL);
    let mut r = check_rng(seed, "purified-distance-triangle");
    for k in 0..trials {
        let l = small_layout(&mut r);
        t.guard(|| format!("trial {k}"), |t| {
            let a = subnormalized(&l, &mut r)?;
            let b = subnormalized(&l, &mut r)?;
            let c = subnormalized(&l, &mut r)?;
            let lhs = purified_distance(&a, &c)?;
            let rhs = purified_distance(&a, &b)? + purified_distance(&b, &c)?;
            t.record_le(lhs, rhs, || format!("trial {k}"));
            Ok(())
        });
    }
    t.finish()
}

/// P(ΠρΠ, ΠσΠ) ≤ P(ρ, σ), compared as squares: √(1 − F̄²) amplifies rounding near P = 0.
pub fn projection_monotonicity(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "projection-monotonicity", TOL);
    let mut r = check_rng(seed, "projection-monotonicity");
    for k in 0..trials {
        let l = small_layout(&mut r);
        t.guard(|| format!("trial {k}"), |t| {
            let rho = subnormalized(&l, &mut r)?;
            let sigma = subnormalized(&l, &mut r)?;
            let rank = r.random_range(1..=l.dim());
            let pi = random_projector(&l, rank, &mut r)?;
            let lhs = purified_distance(&rho.project(&pi)?, &sigma.project(&pi)?)?;
            let rhs = purified_distance(&rho, &sigma)?;
            t.record_le(lhs * lhs, rhs * rhs, || format!("trial {k}, rank {rank}"));
            Ok(())
        });
    }
    t.finish()
}

/// P(ΠρΠ, ρ) ≤ √(2t − t²) with t = tr[Π⊥ρ], compared as squares.
pub fn projection_bound(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "projection-bound", TOL);
    let mut r = check_rng(seed, "projection-bound");
    for k in 0..trials {
        let l = small_layout(&mut r);
        t.guard(|| format!("trial {k}"), |t| {
            let rho = any_rank_state(&l, &mut r)?;
            let rank = r.random_range(1..=l.dim());
            let pi = random_projector(&l, rank, &mut r)?;
            let cut = rho.trace() - pi.inner(rho.op())?;
            let p = purified_distance(&rho.project(&pi)?, &rho)?;
            t.record_le(p * p, 2.0 * cut - cut * cut, || format!("trial {k}, rank {rank}"));
            Ok(())
        });
    }
    t.finish()
}

/// tr[Q^s R^{1−s}] ≥ tr[P₊R + P₋Q] for full-rank PSD Q, R of random scale; the excess is
/// measured relative to 1 + tr Q + tr R.
pub fn audenaert(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "audenaert-corollary", TOL);
    let mut r = check_rng(seed, "audenaert-corollary");
    for k in 0..trials {
        let l = small_layout(&mut r);
        t.guard(|| format!("trial {k}"), |t| {
            let q = random_psd(&l, l.dim(), &mut r)?.scale(r.random_range(0.1..10.0));
            let rr = random_psd(&l, l.dim(), &mut r)?.scale(r.random_range(0.1..10.0));
            let diff = q.sub(&rr)?;
            let p_minus = negative_projector(&diff);
            let p_plus = diff.spectral_projector(|x| x >= -DEGENERACY_TOL);
            let rhs = p_plus.inner(&rr)? + p_minus.inner(&q)?;
            for s in S_VALUES {
                // Q and R have full rank, so X⁰ = 1
                let lhs = match s {
                    x if x == 0.0 => rr.trace(),
                    x if x == 1.0 => q.trace(),
                    _ => (psd_power(q.matrix(), s) * psd_power(rr.matrix(), 1.0 - s)).trace().re,
                };
                let scale = 1.0 + q.trace() + rr.trace();
                t.record((rhs - lhs) / scale, || format!("trial {k}, s = {s}"));
            }
            Ok(())
        });
    }
    t.finish()
}

/// ‖Σ λᵢPᵢ − H‖∞ ≤ 1e-9 for random 16×16 Hermitians.
pub fn eig_reconstruction(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "eig-reconstruction", TOL);
    let mut r = check_rng(seed, "eig-reconstruction");
    let l = layout(&[("A", 4), ("B", 4)]);
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let h = random_hermitian_with(&l, &mut r)?;
            let rec = eig_h(&h).reconstruct().expect("non-empty");
            t.record(rec.sub(&h)?.operator_norm(), || format!("trial {k}"));
            Ok(())
        });
    }
    t.finish()
}

/// Spectrum of the real embedding is the doubled spectrum.
pub fn realify_spectrum(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "realify-spectrum", TOL);
    let mut r = check_rng(seed, "realify-spectrum");
    for k in 0..trials {
        let l = small_layout(&mut r);
        t.guard(|| format!("trial {k}"), |t| {
            let h = random_hermitian_with(&l, &mut r)?;
            let mut doubled: Vec<f64> = h.eig().values.iter().flat_map(|&x| [x, x]).collect();
            let mut real: Vec<f64> = checked_eigenvalues(&h.realify()).iter().copied().collect();
            doubled.sort_by(f64::total_cmp);
            real.sort_by(f64::total_cmp);
            let dev = doubled.iter().zip(&real).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            t.record(dev, || format!("trial {k}"));
            Ok(())
        });
    }
    t.finish()
}

/// The matching extension reduces to σ and preserves the purified distance.
pub fn matching_extension_check(trials: usize, seed: u64) -> CheckResult {
    let mut t = Tally::new(SUITE, "matching-extension", 1e-6);
    let mut r = check_rng(seed, "matching-extension");
    let l = layout(&[("A", 2), ("B", 2)]);
    let la = layout(&[("A", 2)]);
    for k in 0..trials {
        t.guard(|| format!("trial {k}"), |t| {
            let rho_ext = any_rank_state(&l, &mut r)?;
            let rho = rho_ext.partial_trace(&["A"])?;
            let sigma = any_rank_state(&la, &mut r)?;
            let ext = matching_extension(&rho_ext, &rho, &sigma)?;
            let marginal = ext.partial_trace(&["A"])?;
            let dev = (marginal.matrix() - sigma.matrix()).camax();
            let gap = (purified_distance(&rho_ext, &ext)? - purified_distance(&rho, &sigma)?).abs();
            t.record(dev.max(gap), || format!("trial {k}"));
            Ok(())
        });
    }
    t.finish()
}
