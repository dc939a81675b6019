//! Min-, max- and S-entropies of bipartite splits, relative to a fixed σ_B or optimized.
//!
//! Closed forms and SDP routes are both available so that each can cross-check the other.

mod value;

pub use value::{Bits, Certificate, EntropyValue, Method, SdpSummary};

use crate::error::{Error, Result};
use crate::operator::{
    fidelity_psd, negative_projector, pinv_sqrt, purify_with, CMat, HermitianOperator, QuantumState, Spectrum, Split,
    SystemLayout, DEGENERACY_TOL,
};
use crate::sdp::{self, LinearMap, Relation, SdpProblem, SdpSolution, Sense, SparseHermitian};

/// ρ reduced to the split's systems and ordered A then B.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    pub rho: QuantumState,
    pub a: SystemLayout,
    pub b: SystemLayout,
}

impl Prepared {
    pub fn ab(&self) -> &SystemLayout {
        self.rho.layout()
    }
}

pub(crate) fn prepare(rho: &QuantumState, split: &Split) -> Result<Prepared> {
    split.check(rho.layout())?;
    if rho.trace() <= 1e-14 {
        return Err(Error::InvalidState("entropies of a zero-trace operator are undefined".into()));
    }
    let ordered = rho.partial_trace(&split.labels())?.permute(&split.labels())?;
    let a = ordered.layout().restrict(&split.a)?;
    let b = ordered.layout().restrict(&split.b)?;
    Ok(Prepared { rho: ordered, a, b })
}

/// σ permuted into the order of `b`; layouts must agree up to order.
pub(crate) fn align_sigma(sigma: &QuantumState, b: &SystemLayout) -> Result<QuantumState> {
    if sigma.layout().len() != b.len() {
        return Err(Error::Layout(format!(
            "σ lives on {} but the conditioning systems are {}",
            sigma.layout().describe(),
            b.describe()
        )));
    }
    for f in b.factors() {
        if sigma.layout().dim_of(&f.label)? != f.dim {
            return Err(Error::Dimension(format!("σ factor `{}` has the wrong dimension", f.label)));
        }
    }
    if b.is_empty() {
        return Ok(sigma.clone());
    }
    sigma.permute(&b.labels())
}

fn embed_sigma(sigma: &QuantumState, p: &Prepared) -> Result<HermitianOperator> {
    sigma.op().embed(p.ab())
}

/// Weight of ρ_B outside supp σ_B.
fn support_leak(p: &Prepared, sigma: &QuantumState) -> Result<f64> {
    let rho_b = p.rho.partial_trace(&p.b.labels())?;
    let supp = sigma.op().support_projector();
    Ok(rho_b.trace() - supp.inner(rho_b.op())?)
}

fn leak_tol(p: &Prepared) -> f64 {
    1e-9 * p.rho.trace().max(1e-300)
}

/// H_min(A|B)_{ρ|σ} = −log λ_max((1⊗σ)^{−1/2} ρ (1⊗σ)^{−1/2}); −∞ when supp ρ_B ⊄ supp σ_B.
pub fn hmin_rel(rho: &QuantumState, sigma: &QuantumState, split: &Split) -> Result<EntropyValue> {
    let p = prepare(rho, split)?;
    let sigma = align_sigma(sigma, &p.b)?;
    let leak = support_leak(&p, &sigma)?;
    if leak > leak_tol(&p) {
        let mut v = EntropyValue::closed_form(Bits::NegInf);
        v.notes.push(format!("ρ_B has weight {leak:.3e} outside supp σ_B"));
        return Ok(v);
    }
    let t = pinv_sqrt(embed_sigma(&sigma, &p)?.matrix());
    let m = &t * p.rho.matrix() * &t;
    let lmax = Spectrum::of(&m).values[0];
    Ok(EntropyValue::closed_form(Bits::neg_log2_of(lmax)))
}

/// Closed forms for trivial conditioning (−log λ_max) and pure states (−2 log tr √ρ_A).
pub fn hmin_closed_form(rho: &QuantumState, split: &Split) -> Result<Option<EntropyValue>> {
    let p = prepare(rho, split)?;
    if p.b.is_empty() {
        let lmax = p.rho.op().max_eigenvalue();
        let sigma = HermitianOperator::from_real_diagonal(SystemLayout::trivial(), &[lmax])?;
        return Ok(Some(EntropyValue::closed_form(Bits::neg_log2_of(lmax)).with_certificate(Certificate::Sigma(sigma))));
    }
    if p.rho.op().rank() == 1 {
        let rho_b = p.rho.partial_trace(&p.b.labels())?;
        let sqrt_b = rho_b.op().map_spectrum(|x| x.max(0.0).sqrt());
        let s = sqrt_b.trace();
        let sigma = sqrt_b.scale(s);
        return Ok(Some(EntropyValue::closed_form(Bits::neg_log2_of(s * s)).with_certificate(Certificate::Sigma(sigma))));
    }
    Ok(None)
}

fn sdp_value(bits: Bits, method: Method, sol: &SdpSolution, cert: Certificate) -> EntropyValue {
    EntropyValue { bits, method, certificate: Some(cert), sdp: Some(SdpSummary::from(sol)), notes: Vec::new() }
}

/// Program 2^{−H_min} = min tr σ_B s.t. 1_A⊗σ_B ⪰ ρ_AB.
pub(crate) fn hmin_program(p: &Prepared) -> Result<(SdpProblem, sdp::BlockId)> {
    let mut prob = SdpProblem::new(Sense::Minimize);
    let sig = prob.add_block("sigma", p.b.dim());
    prob.add_objective(sig, SparseHermitian::identity(p.b.dim()));
    prob.add_matrix_constraint(
        "domination",
        vec![(sig, 1.0, LinearMap::Embed { sub: p.b.clone(), full: p.ab().clone() })],
        Relation::Ge,
        p.rho.matrix(),
    )?;
    Ok((prob, sig))
}

/// H_min(A|B)_ρ via its SDP; the certificate is the optimal (unnormalized) σ_B.
pub fn hmin(rho: &QuantumState, split: &Split) -> Result<EntropyValue> {
    let p = prepare(rho, split)?;
    let (prob, sig) = hmin_program(&p)?;
    let sol = crate::sdp::solve(&prob)?.require_optimal("min-entropy program")?;
    let sigma = HermitianOperator::new(p.b.clone(), sol.block(sig).clone())?;
    Ok(sdp_value(Bits::neg_log2_of(sol.value()), Method::SdpPrimal, &sol, Certificate::Sigma(sigma)))
}

/// Closed form when available, SDP otherwise.
pub fn hmin_auto(rho: &QuantumState, split: &Split) -> Result<EntropyValue> {
    match hmin_closed_form(rho, split)? {
        Some(v) => Ok(v),
        None => hmin(rho, split),
    }
}

/// H_max(A|B)_{ρ|σ} = log F(ρ_AB, 1⊗σ_B)².
pub fn hmax_rel(rho: &QuantumState, sigma: &QuantumState, split: &Split) -> Result<EntropyValue> {
    let p = prepare(rho, split)?;
    let sigma = align_sigma(sigma, &p.b)?;
    let f = fidelity_psd(p.rho.matrix(), embed_sigma(&sigma, &p)?.matrix());
    Ok(EntropyValue::closed_form(Bits::log2_of(f * f)))
}

/// Purification of the prepared state on AB ⊗ C with a fresh label.
fn purified(p: &Prepared) -> Result<(SystemLayout, CMat)> {
    let label = p.ab().fresh_label("C");
    let psi = purify_with(&p.rho, &label, 0)?;
    Ok((psi.layout().clone(), psi.density().matrix().clone()))
}

/// Strict feasibility margin of the explicit interior point Z̄ = 2‖ρ‖∞·1 (and λ̄ = 2‖Z̄_B‖∞).
fn slater_probe(prob: &SdpProblem, z_dim: usize, norm: f64, lambda: Option<f64>) -> Result<f64> {
    let mut y = vec![0.0; prob.constraints.len()];
    let zbar = CMat::identity(z_dim, z_dim) * num_complex::Complex64::new(2.0 * norm, 0.0);
    prob.group_multipliers(sdp::GroupId(0), &zbar, &mut y);
    if let Some(l) = lambda {
        *y.last_mut().expect("trace row") = l;
    }
    let margin = prob.dual_margin_at(&y)?;
    if margin <= 0.0 {
        return Err(Error::Precondition(format!("explicit Slater point is not strictly feasible (margin {margin:.3e})")));
    }
    Ok(margin)
}

/// Program for F(ρ, 1⊗σ)² = max ⟨ρ̄, X⟩ s.t. tr_C X ⪯ 1⊗σ; the dual multiplier is Z_AB.
pub(crate) fn hmax_rel_program(p: &Prepared, sigma_ab: &HermitianOperator) -> Result<(SdpProblem, f64)> {
    let (abc, rbar) = purified(p)?;
    let mut prob = SdpProblem::new(Sense::Maximize);
    let x = prob.add_block("X", abc.dim());
    let w = prob.add_block("W", p.ab().dim());
    prob.add_objective(x, SparseHermitian::from_dense(&rbar));
    prob.add_matrix_constraint(
        "extension",
        vec![
            (x, 1.0, LinearMap::PartialTrace { full: abc, keep: p.ab().labels() }),
            (w, 1.0, LinearMap::Identity),
        ],
        Relation::Eq,
        sigma_ab.matrix(),
    )?;
    let margin = slater_probe(&prob, p.ab().dim(), p.rho.trace(), None)?;
    Ok((prob, margin))
}

/// H_max(A|B)_{ρ|σ} through the Z_AB program; certificate Z_AB.
pub fn hmax_rel_sdp(rho: &QuantumState, sigma: &QuantumState, split: &Split) -> Result<EntropyValue> {
    let p = prepare(rho, split)?;
    let sigma = align_sigma(sigma, &p.b)?;
    let (prob, margin) = hmax_rel_program(&p, &embed_sigma(&sigma, &p)?)?;
    let sol = crate::sdp::solve(&prob)?.require_optimal("relative max-entropy program")?;
    let z = HermitianOperator::new(p.ab().clone(), sol.dual_matrix(&prob, sdp::GroupId(0)))?;
    let mut v = sdp_value(Bits::log2_of(sol.value()), Method::SdpDual, &sol, Certificate::Z(z));
    v.notes.push(format!("slater margin {margin:.3e}"));
    Ok(v)
}

/// Program 2^{H_max} = max ⟨ρ̄, X⟩ s.t. tr_C X ⪯ 1⊗σ, tr σ ≤ 1.
pub(crate) fn hmax_program(p: &Prepared) -> Result<(SdpProblem, sdp::BlockId, f64)> {
    let (abc, rbar) = purified(p)?;
    let mut prob = SdpProblem::new(Sense::Maximize);
    let x = prob.add_block("X", abc.dim());
    let w = prob.add_block("W", p.ab().dim());
    let sig = prob.add_block("sigma", p.b.dim());
    prob.add_objective(x, SparseHermitian::from_dense(&rbar));
    prob.add_matrix_constraint(
        "extension",
        vec![
            (x, 1.0, LinearMap::PartialTrace { full: abc, keep: p.ab().labels() }),
            (w, 1.0, LinearMap::Identity),
            (sig, -1.0, LinearMap::Embed { sub: p.b.clone(), full: p.ab().clone() }),
        ],
        Relation::Eq,
        &CMat::zeros(p.ab().dim(), p.ab().dim()),
    )?;
    prob.add_constraint(vec![(sig, SparseHermitian::identity(p.b.dim()))], Relation::Le, 1.0);
    let norm = p.rho.trace();
    let lambda = 2.0 * 2.0 * norm * p.a.dim() as f64;
    let margin = slater_probe(&prob, p.ab().dim(), norm, Some(lambda))?;
    Ok((prob, sig, margin))
}

/// H_max(A|B)_ρ = log min ‖Z_B‖∞ over Z_AB ⊗ 1_C ⪰ ρ_ABC; certificate Z_AB.
pub fn hmax(rho: &QuantumState, split: &Split) -> Result<EntropyValue> {
    let p = prepare(rho, split)?;
    let (prob, sig, margin) = hmax_program(&p)?;
    let sol = crate::sdp::solve(&prob)?.require_optimal("max-entropy program")?;
    let z = HermitianOperator::new(p.ab().clone(), sol.dual_matrix(&prob, sdp::GroupId(0)))?;
    let mut v = sdp_value(Bits::log2_of(sol.value()), Method::SdpDual, &sol, Certificate::Z(z));
    v.notes.push(format!("slater margin {margin:.3e}"));
    let s = sol.block(sig);
    v.notes.push(format!("optimal σ_B trace {:.9}", s.trace().re));
    Ok(v)
}

/// Optimal σ_B of the max-entropy program, normalized.
pub fn hmax_sigma(rho: &QuantumState, split: &Split) -> Result<QuantumState> {
    let p = prepare(rho, split)?;
    let (prob, sig, _) = hmax_program(&p)?;
    let sol = crate::sdp::solve(&prob)?.require_optimal("max-entropy program")?;
    let s = HermitianOperator::new(p.b.clone(), sol.block(sig).clone())?;
    let t = s.trace();
    QuantumState::clamped(s.scale(1.0 / t))
}

/// tr[P^λ ρ] with P^λ the projector onto the strictly negative eigenspace of 2^λ ρ − 1⊗σ.
pub fn s_trace(rho_ab: &HermitianOperator, sigma_ab: &HermitianOperator, lambda: f64) -> Result<f64> {
    let m = rho_ab.scale(lambda.exp2()).sub(sigma_ab)?;
    let pr = negative_projector(&m);
    pr.inner(rho_ab)
}

/// Grid and bisection parameters of the S-entropy search.
const S_GRID: usize = 400;
const S_MARGIN: f64 = 40.0;
const S_TOL: f64 = 1e-6;

/// S^ε(A|B)_{ρ|σ} = inf{λ : tr[P^λ ρ] ≤ ε}.
pub fn s_entropy(rho: &QuantumState, sigma: &QuantumState, split: &Split, eps: f64) -> Result<EntropyValue> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("ε = {eps} outside (0, 1)")));
    }
    let p = prepare(rho, split)?;
    let sigma = align_sigma(sigma, &p.b)?;
    if eps >= p.rho.trace() {
        let mut v = EntropyValue::closed_form(Bits::NegInf);
        v.notes.push("ε ≥ tr ρ: predicate holds for every λ".into());
        return Ok(v);
    }
    let leak = support_leak(&p, &sigma)?;
    if leak > leak_tol(&p) {
        return Err(Error::Precondition(format!("supp ρ_B ⊄ supp σ_B (weight {leak:.3e} outside)")));
    }
    let sab = embed_sigma(&sigma, &p)?;
    let rho_ab = p.rho.op();
    let pos_min = |h: &HermitianOperator| h.eig().values.iter().copied().filter(|&x| x > DEGENERACY_TOL).fold(f64::INFINITY, f64::min);
    let c1 = (sigma.op().max_eigenvalue() / pos_min(rho_ab)).log2().abs();
    let c2 = (rho_ab.max_eigenvalue() / pos_min(sigma.op())).log2().abs();
    let c = c1.max(c2);
    let (lo, hi) = (-c - S_MARGIN, c + S_MARGIN);
    let holds = |l: f64| -> Result<bool> { Ok(s_trace(rho_ab, &sab, l)? <= eps) };
    let grid: Vec<f64> = (0..S_GRID).map(|k| lo + (hi - lo) * k as f64 / (S_GRID - 1) as f64).collect();
    let flags: Vec<bool> = grid.iter().map(|&l| holds(l)).collect::<Result<_>>()?;
    let mut notes = Vec::new();
    let flips = flags.windows(2).filter(|w| w[0] && !w[1]).count();
    if flips > 0 {
        notes.push(format!("predicate non-monotone: {flips} true→false flips on the grid"));
    }
    // smallest grid index from which the predicate stays true
    let first = match flags.iter().rposition(|f| !f) {
        None => 0,
        Some(k) if k + 1 < S_GRID => k + 1,
        Some(_) => return Err(Error::Precondition("S-entropy predicate fails at the upper bracket".into())),
    };
    let value = if first == 0 {
        notes.push("predicate holds at the lower bracket".into());
        grid[0]
    } else {
        let (mut a, mut b) = (grid[first - 1], grid[first]);
        while b - a > S_TOL {
            let m = 0.5 * (a + b);
            if holds(m)? {
                b = m;
            } else {
                a = m;
            }
        }
        b
    };
    let mut v = EntropyValue::closed_form(Bits::Finite(value));
    v.notes = notes;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{random_pure, random_state, PureState};

    fn lay(spec: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(spec.iter().map(|&(l, d)| (l, d))).unwrap()
    }

    fn ab() -> Split {
        Split::parse("A|B").unwrap()
    }

    fn mixed(spec: &[(&str, usize)]) -> QuantumState {
        QuantumState::maximally_mixed(lay(spec))
    }

    fn phi() -> QuantumState {
        PureState::maximally_entangled("A", "B", 2).unwrap().density()
    }

    fn close(v: &EntropyValue, x: f64, tol: f64) {
        let b = v.finite().unwrap_or_else(|| panic!("not finite: {}", v.bits));
        assert!((b - x).abs() < tol, "{b} vs {x}");
    }

    #[test]
    fn hmin_rel_examples() {
        let sigma = random_state(&lay(&[("B", 2)]), 2, 3).unwrap();
        let rho = mixed(&[("A", 2)]).tensor(&sigma).unwrap();
        close(&hmin_rel(&rho, &sigma, &ab()).unwrap(), 1.0, 1e-10);
        let zero = QuantumState::basis(lay(&[("B", 2)]), 0).unwrap();
        assert_eq!(hmin_rel(&phi(), &zero, &ab()).unwrap().bits, Bits::NegInf);
        close(&hmin_rel(&phi(), &mixed(&[("B", 2)]), &ab()).unwrap(), -1.0, 1e-10);
    }

    #[test]
    fn hmin_examples() {
        let v = hmin(&mixed(&[("A", 2), ("B", 2)]), &ab()).unwrap();
        close(&v, 1.0, 1e-7);
        let v = hmin(&phi(), &ab()).unwrap();
        close(&v, -1.0, 1e-7);
        assert!((v.sigma().unwrap().trace() - 2.0).abs() < 1e-6);
        let sum = v.sdp.as_ref().unwrap();
        assert!(sum.gap.abs() <= 1e-7 * (1.0 + 1.0));
        // φ_AB ⊗ π_C conditioned on C
        let st = phi().tensor(&mixed(&[("C", 2)])).unwrap();
        close(&hmin(&st, &Split::parse("AB|C").unwrap()).unwrap(), 0.0, 1e-7);
    }

    #[test]
    fn hmin_closed_forms_agree_with_sdp() {
        let l = lay(&[("A", 2), ("B", 3)]);
        let psi = random_pure(&l, 7).unwrap().density();
        let cf = hmin_closed_form(&psi, &ab()).unwrap().unwrap();
        close(&hmin(&psi, &ab()).unwrap(), cf.finite().unwrap(), 1e-6);
        let rho = random_state(&lay(&[("A", 3)]), 3, 1).unwrap();
        let s = Split::parse("A|").unwrap();
        let cf = hmin_closed_form(&rho, &s).unwrap().unwrap();
        close(&hmin(&rho, &s).unwrap(), cf.finite().unwrap(), 1e-7);
    }

    #[test]
    fn hmin_dominates_relative_values() {
        let l = lay(&[("A", 2), ("B", 2)]);
        let rho = random_state(&l, 3, 21).unwrap();
        let best = hmin(&rho, &ab()).unwrap().finite().unwrap();
        for seed in 0..10 {
            let s = random_state(&lay(&[("B", 2)]), 2, 100 + seed).unwrap();
            let v = hmin_rel(&rho, &s, &ab()).unwrap().finite().unwrap();
            assert!(v <= best + 1e-6);
        }
        // the normalized SDP certificate attains the optimum
        let cert = hmin(&rho, &ab()).unwrap();
        let sig = cert.sigma().unwrap();
        let s = QuantumState::clamped(sig.scale(1.0 / sig.trace())).unwrap();
        close(&hmin_rel(&rho, &s, &ab()).unwrap(), best, 1e-5);
    }

    #[test]
    fn hmax_rel_examples() {
        let l = lay(&[("A", 2), ("B", 2)]);
        let r00 = QuantumState::basis(l.clone(), 0).unwrap();
        let s0 = QuantumState::basis(lay(&[("B", 2)]), 0).unwrap();
        close(&hmax_rel(&r00, &s0, &ab()).unwrap(), 0.0, 1e-10);
        close(&hmax_rel(&mixed(&[("A", 2), ("B", 2)]), &mixed(&[("B", 2)]), &ab()).unwrap(), 1.0, 1e-10);
        let rho = random_state(&l, 4, 5).unwrap();
        let sigma = random_state(&lay(&[("B", 2)]), 2, 6).unwrap();
        let cf = hmax_rel(&rho, &sigma, &ab()).unwrap().finite().unwrap();
        let sd = hmax_rel_sdp(&rho, &sigma, &ab()).unwrap();
        close(&sd, cf, 1e-5);
        assert!(sd.z().is_some());
    }

    #[test]
    fn hmax_examples() {
        let l = lay(&[("A", 2), ("B", 2)]);
        close(&hmax(&QuantumState::basis(l, 0).unwrap(), &ab()).unwrap(), 0.0, 1e-6);
        close(&hmax(&mixed(&[("A", 2), ("B", 2)]), &ab()).unwrap(), 1.0, 1e-6);
        close(&hmax(&phi(), &ab()).unwrap(), -1.0, 1e-6);
    }

    #[test]
    fn hmax_duality_on_pure_states() {
        let l = lay(&[("A", 2), ("B", 2), ("C", 2)]);
        let psi = random_pure(&l, 17).unwrap().density();
        let mx = hmax(&psi, &ab()).unwrap().finite().unwrap();
        let mn = hmin(&psi, &Split::parse("A|C").unwrap()).unwrap().finite().unwrap();
        assert!((mx + mn).abs() < 2e-5, "{mx} {mn}");
    }

    #[test]
    fn hmax_dominates_relative_values() {
        let l = lay(&[("A", 2), ("B", 2)]);
        let rho = random_state(&l, 2, 8).unwrap();
        let best = hmax(&rho, &ab()).unwrap().finite().unwrap();
        for seed in 0..10 {
            let s = random_state(&lay(&[("B", 2)]), 2, 200 + seed).unwrap();
            assert!(hmax_rel(&rho, &s, &ab()).unwrap().finite().unwrap() <= best + 1e-6);
        }
        let s = hmax_sigma(&rho, &ab()).unwrap();
        close(&hmax_rel(&rho, &s, &ab()).unwrap(), best, 1e-5);
    }

    #[test]
    fn s_entropy_examples() {
        let rho = mixed(&[("A", 2), ("B", 2)]);
        let s = mixed(&[("B", 2)]);
        for eps in [0.05, 0.5, 0.95] {
            close(&s_entropy(&rho, &s, &ab(), eps).unwrap(), 1.0, 2e-6);
        }
        let sub = QuantumState::new(rho.op().scale(0.3)).unwrap();
        assert_eq!(s_entropy(&sub, &s, &ab(), 0.4).unwrap().bits, Bits::NegInf);
        assert!(s_entropy(&rho, &s, &ab(), 1.0).is_err());
        let zero = QuantumState::basis(lay(&[("B", 2)]), 0).unwrap();
        assert!(matches!(s_entropy(&rho, &zero, &ab(), 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn s_entropy_below_relative_max_entropy() {
        let l = lay(&[("A", 2), ("B", 2)]);
        for seed in 0..5 {
            let rho = random_state(&l, 4, 300 + seed).unwrap();
            let sigma = random_state(&lay(&[("B", 2)]), 2, 400 + seed).unwrap();
            let s = s_entropy(&rho, &sigma, &ab(), 0.1).unwrap().finite().unwrap();
            let h = hmax_rel(&rho, &sigma, &ab()).unwrap().finite().unwrap();
            assert!(s <= h + (1.0f64 / 0.01).log2() + 1e-6);
        }
    }

    #[test]
    fn zero_trace_rejected() {
        let z = QuantumState::new(HermitianOperator::zeros(lay(&[("A", 2), ("B", 2)]))).unwrap();
        assert!(hmin(&z, &ab()).is_err());
        assert!(hmax(&z, &ab()).is_err());
    }
}
