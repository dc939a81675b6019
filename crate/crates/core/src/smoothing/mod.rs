//! Smooth min- and max-entropies over the purified-distance ball and the constructive
//! smoothing recipes for relative max- and min-entropies.

use serde::Serialize;

use crate::chain::error_f;
use crate::entropy::{self, prepare, Bits, Certificate, EntropyValue, Method, Prepared, SdpSummary};
use crate::error::{Error, Result};
use crate::operator::{
    purified_distance, purify_with, CMat, HermitianOperator, PureState, QuantumState, Split,
};
use crate::sdp::{self, LinearMap, Relation, SdpProblem, Sense, SparseHermitian};

#[derive(Clone, Debug, Default)]
pub struct SmoothOptions {
    /// Extra basis vectors appended by direct sum to the first factor of A and of B.
    pub extra_dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothedResult {
    pub value: EntropyValue,
    pub epsilon: f64,
    /// Optimal ρ̃ reduced to the split's systems (padded layout when `extra_dim > 0`).
    #[serde(skip)]
    pub witness: QuantumState,
    /// P(witness, ρ).
    pub distance: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid(format!("smoothing radius {eps} outside [0, 1)")));
    }
    Ok(())
}

fn pad(p: Prepared, extra: usize) -> Result<Prepared> {
    if extra == 0 {
        return Ok(p);
    }
    let mut rho = p.rho;
    for side in [&p.a, &p.b] {
        if let Some(f) = side.factors().first() {
            rho = rho.pad_factor(&f.label, f.dim + extra)?;
        }
    }
    let a = rho.layout().restrict(&p.a.labels())?;
    let b = rho.layout().restrict(&p.b.labels())?;
    Ok(Prepared { rho, a, b })
}

/// Smooth min-entropy of X|Y for the centre `p`, with `psi` a purification ordered X, Y, Z.
fn smooth_min_core(p: &Prepared, psi: &PureState, eps: f64) -> Result<(EntropyValue, HermitianOperator)> {
    let xy = p.ab().clone();
    let xyz = psi.layout().clone();
    let mut prob = SdpProblem::new(Sense::Minimize);
    let rt = prob.add_block("rho_tilde", xyz.dim());
    let sig = prob.add_block("sigma", p.b.dim());
    prob.add_objective(sig, SparseHermitian::identity(p.b.dim()));
    prob.add_matrix_constraint(
        "domination",
        vec![
            (sig, 1.0, LinearMap::Embed { sub: p.b.clone(), full: xy.clone() }),
            (rt, -1.0, LinearMap::PartialTrace { full: xyz.clone(), keep: xy.labels() }),
        ],
        Relation::Ge,
        &CMat::zeros(xy.dim(), xy.dim()),
    )?;
    prob.add_constraint(
        vec![(rt, SparseHermitian::from_dense(psi.density().matrix()))],
        Relation::Ge,
        1.0 - eps * eps,
    );
    prob.add_constraint(vec![(rt, SparseHermitian::identity(xyz.dim()))], Relation::Le, 1.0);
    let sol = sdp::solve(&prob)?.require_optimal("smooth min-entropy program")?;
    let sigma = HermitianOperator::new(p.b.clone(), sol.block(sig).clone())?;
    let value = EntropyValue {
        bits: Bits::neg_log2_of(sol.value()),
        method: Method::SdpPrimal,
        certificate: Some(Certificate::Sigma(sigma)),
        sdp: Some(SdpSummary::from(&sol)),
        notes: Vec::new(),
    };
    let rho_tilde = HermitianOperator::new(xyz, sol.block(rt).clone())?;
    Ok((value, rho_tilde))
}

/// Reduced witness as a state; the tiny infeasibility of an interior iterate is clipped.
fn witness_of(rho_tilde: &HermitianOperator, keep: &[String]) -> Result<QuantumState> {
    QuantumState::clamped(rho_tilde.partial_trace(keep)?)
}

/// H^ε_min(A|B)_ρ: max of H_min over sub-normalized ρ̃ in the ε-ball, via the purified program
/// min tr σ_B s.t. 1⊗σ_B ⪰ tr_C ρ̃, ⟨ψ|ρ̃|ψ⟩ ≥ 1 − ε², tr ρ̃ ≤ 1.
pub fn smooth_hmin(rho: &QuantumState, split: &Split, eps: f64) -> Result<SmoothedResult> {
    smooth_hmin_with(rho, split, eps, &SmoothOptions::default())
}

pub fn smooth_hmin_with(rho: &QuantumState, split: &Split, eps: f64, opts: &SmoothOptions) -> Result<SmoothedResult> {
    check_eps(eps)?;
    let p = pad(prepare(rho, split)?, opts.extra_dim)?;
    if eps == 0.0 {
        // the ball is a single point; the program has no strictly feasible ρ̃
        let mut value = entropy::hmin(&p.rho, &Split::new(p.a.labels(), p.b.labels())?)?;
        value.notes.push("ε = 0: non-smooth value".into());
        return Ok(SmoothedResult { value, epsilon: 0.0, witness: p.rho.clone(), distance: 0.0 });
    }
    let label = p.ab().fresh_label("R");
    let psi = purify_with(&p.rho, &label, 0)?;
    let (value, rho_tilde) = smooth_min_core(&p, &psi, eps)?;
    let witness = witness_of(&rho_tilde, &p.ab().labels())?;
    let distance = purified_distance(&witness, &p.rho)?;
    Ok(SmoothedResult { value, epsilon: eps, witness, distance })
}

/// H^ε_max(A|B)_ρ = −H^ε_min(A|C)_ρ for a purification ρ_ABC.
pub fn smooth_hmax(rho: &QuantumState, split: &Split, eps: f64) -> Result<SmoothedResult> {
    smooth_hmax_with(rho, split, eps, &SmoothOptions::default())
}

pub fn smooth_hmax_with(rho: &QuantumState, split: &Split, eps: f64, opts: &SmoothOptions) -> Result<SmoothedResult> {
    check_eps(eps)?;
    let p = pad(prepare(rho, split)?, opts.extra_dim)?;
    let c = p.ab().fresh_label("C");
    let psi = purify_with(&p.rho, &c, 0)?;
    let a = p.a.labels();
    let b = p.b.labels();
    // centre ρ_AC, purified by B: order A, C, B
    let order: Vec<String> = a.iter().cloned().chain([c.clone()]).chain(b.iter().cloned()).collect();
    let psi = psi.permute(&order)?;
    let ac: Vec<String> = a.iter().cloned().chain([c.clone()]).collect();
    let centre = psi.reduced(&ac)?;
    let q = Prepared {
        a: centre.layout().restrict(&a)?,
        b: centre.layout().restrict(&[c.clone()])?,
        rho: centre,
    };
    let (mut value, witness, distance) = if eps == 0.0 {
        let v = entropy::hmin(&q.rho, &Split::new(a.clone(), vec![c.clone()])?)?;
        (v, p.rho.clone(), 0.0)
    } else {
        let (v, rho_tilde) = smooth_min_core(&q, &psi, eps)?;
        let ab: Vec<String> = a.iter().cloned().chain(b.iter().cloned()).collect();
        let w = witness_of(&rho_tilde, &ab)?.permute(&p.ab().labels())?;
        let d = purified_distance(&w, &p.rho)?;
        (v, w, d)
    };
    value.bits = value.bits.neg();
    value.method = Method::Duality;
    value.certificate = None;
    Ok(SmoothedResult { value, epsilon: eps, witness, distance })
}

/// Outcome of the relative max-entropy smoothing recipe.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma4Report {
    /// H_max(A|B)_{ρ̃}.
    pub hmax_tilde: Bits,
    /// H_max(A|B)_{ρ|ρ′} (closed form).
    pub hmax_rel: Bits,
    /// H_max(A|B)_{ρ|ρ′} from the Z-program whose optimizer built Π_B.
    pub hmax_rel_sdp: Bits,
    pub f: f64,
    pub bound_holds: bool,
    /// P(ρ̃, ρ′).
    pub distance: f64,
    /// P(ρ, ρ′).
    pub eps_prime: f64,
    pub distance_holds: bool,
    pub projector_rank: usize,
    /// tr[Π⊥_B ρ′_B].
    pub cut_weight: f64,
}

const BOUND_TOL: f64 = 1e-5;

/// Builds ρ̃ = Π_B ρ Π_B from the optimal Z_AB of the program for H_max(A|B)_{ρ|ρ′}, with Π_B the
/// minimum-rank projector onto the smallest eigenvalues of Z_B such that
/// tr[Π⊥_B ρ′_B] ≤ 1 − √(1 − ε²). Eigenvectors are added one at a time in ascending order.
pub fn lemma4_construct(
    rho: &QuantumState,
    rho_prime: &QuantumState,
    split: &Split,
    eps: f64,
) -> Result<(QuantumState, Lemma4Report)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("ε = {eps} outside (0, 1)")));
    }
    let p = prepare(rho, split)?;
    let pp = prepare(rho_prime, split)?;
    if p.ab() != pp.ab() {
        return Err(Error::Layout("ρ and ρ′ live on different systems".into()));
    }
    let rho_b = pp.rho.partial_trace(&pp.b.labels())?;
    let z_val = entropy::hmax_rel_sdp(&p.rho, &rho_b, &Split::new(p.a.labels(), p.b.labels())?)?;
    let z = z_val.z().expect("Z certificate").clone();
    let z_b = z.partial_trace(&p.b.labels())?;
    let spec = z_b.eig();
    let t = eps * eps / (1.0 + (1.0 - eps * eps).sqrt());
    let db = p.b.dim();
    let mut proj = CMat::zeros(db, db);
    let mut rank = 0;
    let mut cut = rho_b.trace();
    // ascending eigen order: Spectrum stores descending values
    for k in (0..db).rev() {
        if cut <= t {
            break;
        }
        let v = spec.vectors.column(k);
        proj += &v * v.adjoint();
        rank += 1;
        let perp = HermitianOperator::identity(p.b.clone()).sub(&HermitianOperator::new(p.b.clone(), proj.clone())?)?;
        cut = perp.inner(rho_b.op())?;
    }
    let pi_b = HermitianOperator::new(p.b.clone(), proj)?;
    let pi = pi_b.embed(p.ab())?;
    let rho_tilde = QuantumState::clamped(p.rho.op().sandwich(&pi)?)?;
    let sp = Split::new(p.a.labels(), p.b.labels())?;
    let hmax_tilde = if rho_tilde.trace() > 1e-12 { entropy::hmax(&rho_tilde, &sp)?.bits } else { Bits::NegInf };
    let hmax_rel = entropy::hmax_rel(&p.rho, &rho_b, &sp)?.bits;
    let f = error_f(eps)?;
    let bound_holds = match (hmax_tilde, hmax_rel) {
        (Bits::NegInf, _) => true,
        (Bits::Finite(l), Bits::Finite(r)) => l <= r + f + BOUND_TOL,
        (_, Bits::PosInf) => true,
        _ => false,
    };
    let distance = purified_distance(&rho_tilde, &pp.rho)?;
    let eps_prime = purified_distance(&p.rho, &pp.rho)?;
    let report = Lemma4Report {
        hmax_tilde,
        hmax_rel,
        hmax_rel_sdp: z_val.bits,
        f,
        bound_holds,
        distance,
        eps_prime,
        distance_holds: distance <= eps + eps_prime + 1e-7,
        projector_rank: rank,
        cut_weight: cut,
    };
    Ok((rho_tilde, report))
}

/// Outcome of the min-entropy smoothing recipe on a pure ρ_ABC.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma5Report {
    /// H_min(A|B)_ρ.
    pub hmin: Bits,
    /// H_min(A|B)_{ρ̃|ρ̃_B}.
    pub hmin_tilde_rel: Bits,
    /// H_min(A|B)_{ρ|ρ̃_B}, the literal relative reading (−∞ whenever Π_B cuts supp ρ_B).
    pub hmin_rel_literal: Bits,
    pub f: f64,
    pub bound_holds: bool,
    /// P(ρ̃, ρ).
    pub distance: f64,
    pub distance_holds: bool,
    /// tr[Π⊥_B ρ_B].
    pub cut_weight: f64,
    pub projector_rank: usize,
    /// Π_B commutes with ρ_B, so that (Π_B ⊗ 1)ψ = (Π_AC ⊗ 1)ψ for a projector Π_AC.
    pub dual_projector_exists: bool,
}

/// ρ̃_ABC = Π ψψ† Π for pure ψ_ABC, with Π_B the projector onto the non-negative eigenspace of
/// ρ_B − t σ*_B, t = 1 − √(1 − ε²), σ*_B the normalized optimizer of H_min(A|B)_ρ.
/// Returns (Π_AC when it exists, Π_B, ρ̃_ABC, report).
pub fn lemma5_construct(
    psi: &QuantumState,
    split: &Split,
    eps: f64,
) -> Result<(Option<HermitianOperator>, HermitianOperator, QuantumState, Lemma5Report)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("ε = {eps} outside (0, 1)")));
    }
    if !psi.is_pure() {
        return Err(Error::InvalidState("the min-entropy recipe needs a pure ρ_ABC".into()));
    }
    split.check(psi.layout())?;
    let c_labels = psi.layout().complement(&split.labels());
    let p = prepare(psi, split)?;
    let sp = Split::new(p.a.labels(), p.b.labels())?;
    let hmin = entropy::hmin(&p.rho, &sp)?;
    let sigma = hmin.sigma().expect("σ certificate");
    let sigma = sigma.scale(1.0 / sigma.trace());
    let rho_b = p.rho.partial_trace(&p.b.labels())?;
    let t = eps * eps / (1.0 + (1.0 - eps * eps).sqrt());
    let diff = rho_b.op().sub(&sigma.scale(t))?;
    let pi_b = diff.spectral_projector(|x| x >= -crate::operator::DEGENERACY_TOL);
    let rank = pi_b.rank();
    let full = psi.layout().clone();
    let pi = pi_b.embed(&full)?;
    let rho_tilde = QuantumState::clamped(psi.op().sandwich(&pi)?)?;
    let cut = rho_b.trace() - pi_b.inner(rho_b.op())?;
    let tilde_ab = rho_tilde.partial_trace(&sp.labels())?.permute(&sp.labels())?;
    let tilde_b = tilde_ab.partial_trace(&p.b.labels())?;
    let f = error_f(eps)?;
    let hmin_tilde_rel = if tilde_ab.trace() > 1e-12 {
        entropy::hmin_rel(&tilde_ab, &tilde_b, &sp)?.bits
    } else {
        Bits::PosInf
    };
    let hmin_rel_literal = if tilde_b.trace() > 1e-12 { entropy::hmin_rel(&p.rho, &tilde_b, &sp)?.bits } else { Bits::NegInf };
    let bound_holds = match (hmin.bits, hmin_tilde_rel) {
        (Bits::Finite(l), Bits::Finite(r)) => l <= r + f + BOUND_TOL,
        (_, Bits::PosInf) | (Bits::NegInf, _) => true,
        _ => false,
    };
    let distance = purified_distance(&rho_tilde, psi)?;
    let commutator = pi_b.matrix() * rho_b.matrix() - rho_b.matrix() * pi_b.matrix();
    let commutes = commutator.camax() < 1e-9;
    let pi_ac = if commutes && !c_labels.is_empty() {
        Some(dual_projector(psi, &p.b.labels(), &pi_b)?)
    } else {
        None
    };
    let report = Lemma5Report {
        hmin: hmin.bits,
        hmin_tilde_rel,
        hmin_rel_literal,
        f,
        bound_holds,
        distance,
        distance_holds: distance <= eps + 1e-7,
        cut_weight: cut,
        projector_rank: rank,
        dual_projector_exists: commutes,
    };
    Ok((pi_ac, pi_b, rho_tilde, report))
}

/// Π_AC with (Π_AC ⊗ 1_B)|ψ⟩ = (1_AC ⊗ Π_B)|ψ⟩, for Π_B commuting with ρ_B: the image of
/// Π_B's eigenspaces under the Schmidt correspondence.
fn dual_projector(psi: &QuantumState, b: &[String], pi_b: &HermitianOperator) -> Result<HermitianOperator> {
    let rest = psi.layout().complement(b);
    let vec = pure_vector(psi)?;
    let order: Vec<String> = rest.iter().cloned().chain(b.iter().cloned()).collect();
    let v = vec.permute(&order)?;
    let rest_layout = v.layout().restrict(&rest)?;
    let (dr, db) = (rest_layout.dim(), pi_b.dim());
    // |ψ⟩ = Σ M[x, y] |x⟩_rest |y⟩_B ; (1 ⊗ Π_B)ψ ↔ M Π_Bᵀ
    let m = CMat::from_fn(dr, db, |x, y| v.vector()[x * db + y]);
    let mp = &m * pi_b.matrix().transpose();
    // projector onto the column space of M Π_Bᵀ
    let svd = mp.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let mut proj = CMat::zeros(dr, dr);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-9 {
            let col = u.column(k);
            proj += &col * col.adjoint();
        }
    }
    let pi_rest = HermitianOperator::new(rest_layout, proj)?;
    pi_rest.permute(&psi.layout().restrict(&rest)?.labels())
}

fn pure_vector(psi: &QuantumState) -> Result<PureState> {
    let s = psi.op().eig();
    let v = s.vectors.column(0) * num_complex::Complex64::new(s.values[0].max(0.0).sqrt(), 0.0);
    PureState::new(psi.layout().clone(), v.into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{random_pure, random_state, SystemLayout};

    fn lay(spec: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(spec.iter().map(|&(l, d)| (l, d))).unwrap()
    }

    fn ab() -> Split {
        Split::parse("A|B").unwrap()
    }

    #[test]
    fn zero_radius_matches_non_smooth() {
        let rho = random_state(&lay(&[("A", 2), ("B", 2)]), 3, 1).unwrap();
        let h = entropy::hmin(&rho, &ab()).unwrap().finite().unwrap();
        let s = smooth_hmin(&rho, &ab(), 0.0).unwrap();
        assert!((s.value.finite().unwrap() - h).abs() < 1e-5);
        let hx = entropy::hmax(&rho, &ab()).unwrap().finite().unwrap();
        let sx = smooth_hmax(&rho, &ab(), 0.0).unwrap();
        assert!((sx.value.finite().unwrap() - hx).abs() < 2e-5);
    }

    #[test]
    fn monotone_in_radius_and_witness_admissible() {
        let rho = random_state(&lay(&[("A", 2), ("B", 2)]), 4, 2).unwrap();
        let mut last_min = f64::NEG_INFINITY;
        let mut last_max = f64::INFINITY;
        for eps in [0.0, 0.05, 0.1, 0.2] {
            let m = smooth_hmin(&rho, &ab(), eps).unwrap();
            let x = smooth_hmax(&rho, &ab(), eps).unwrap();
            assert!(m.distance <= eps + 1e-6 && x.distance <= eps + 1e-6, "{} {}", m.distance, x.distance);
            let (vm, vx) = (m.value.finite().unwrap(), x.value.finite().unwrap());
            assert!(vm >= last_min - 1e-6 && vx <= last_max + 1e-6);
            last_min = vm;
            last_max = vx;
        }
    }

    #[test]
    fn smooth_duality_on_pure_states() {
        let psi = random_pure(&lay(&[("A", 2), ("B", 2), ("C", 2)]), 3).unwrap().density();
        let x = smooth_hmax(&psi, &ab(), 0.1).unwrap().value.finite().unwrap();
        let m = smooth_hmin(&psi, &Split::parse("A|C").unwrap(), 0.1).unwrap().value.finite().unwrap();
        assert!((x + m).abs() < 2e-5, "{x} {m}");
    }

    #[test]
    fn extra_dim_never_hurts() {
        let rho = random_state(&lay(&[("A", 2), ("B", 2)]), 2, 5).unwrap();
        let base = smooth_hmin(&rho, &ab(), 0.1).unwrap().value.finite().unwrap();
        let padded = smooth_hmin_with(&rho, &ab(), 0.1, &SmoothOptions { extra_dim: 1 }).unwrap();
        assert!(padded.value.finite().unwrap() >= base - 1e-6);
        assert_eq!(padded.witness.dim(), 9);
    }

    #[test]
    fn lemma4_identity_and_random() {
        let rho = random_state(&lay(&[("A", 2), ("B", 2)]), 4, 7).unwrap();
        let (rt, rep) = lemma4_construct(&rho, &rho, &ab(), 1e-3).unwrap();
        assert_eq!(rep.projector_rank, 2);
        assert!((rt.matrix() - rho.matrix()).camax() < 1e-9);
        assert!(rep.bound_holds && rep.distance_holds);
        let (_, rep) = lemma4_construct(&rho, &rho, &ab(), 0.3).unwrap();
        assert!(rep.bound_holds && rep.distance_holds, "{rep:?}");
    }

    #[test]
    fn lemma5_bounds() {
        let psi = random_pure(&lay(&[("A", 2), ("B", 2), ("C", 2)]), 9).unwrap().density();
        let (_, _, rt, rep) = lemma5_construct(&psi, &ab(), 0.3).unwrap();
        assert!(rep.bound_holds && rep.distance_holds, "{rep:?}");
        assert!(rt.trace() <= 1.0 + 1e-12);
        let (_, pi_b, rt, rep) = lemma5_construct(&psi, &ab(), 1e-4).unwrap();
        assert_eq!(rep.projector_rank, 2);
        assert!((pi_b.matrix() - CMat::identity(2, 2)).camax() < 1e-9);
        assert!(rep.distance < 1e-9 && (rt.matrix() - psi.matrix()).camax() < 1e-9);
        let mixed = random_state(&lay(&[("A", 2), ("B", 2)]), 2, 1).unwrap();
        assert!(lemma5_construct(&mixed, &ab(), 0.3).is_err());
    }

    #[test]
    fn lemma5_dual_projector_for_commuting_case() {
        // classical-like pure state Σ √p_i |i⟩|i⟩|i⟩
        let l = lay(&[("A", 2), ("B", 2), ("C", 2)]);
        let mut v = crate::operator::CVec::zeros(8);
        v[0] = num_complex::Complex64::new(0.9f64.sqrt(), 0.0);
        v[7] = num_complex::Complex64::new(0.1f64.sqrt(), 0.0);
        let psi = PureState::new(l, v).unwrap();
        let rho = psi.density();
        let (pi_ac, pi_b, rt, rep) = lemma5_construct(&rho, &ab(), 0.5).unwrap();
        assert!(rep.dual_projector_exists && rep.bound_holds && rep.distance_holds);
        let pi_ac = pi_ac.unwrap();
        let lhs = psi.apply_local(&pi_ac).unwrap();
        let rhs = psi.apply_local(&pi_b).unwrap();
        assert!((lhs - rhs).camax() < 1e-9);
        assert!(rt.trace() <= 1.0);
    }
}
