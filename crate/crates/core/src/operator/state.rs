use std::sync::OnceLock;

use num_complex::Complex64;

use super::hermitian::{
    fidelity_psd, pad_index_map, psd_sqrt, CMat, CVec, HermitianOperator, Spectrum, ONE, ZERO,
};
use super::layout::{IndexSplit, SystemLayout};
use super::{DEGENERACY_TOL, STATE_EIG_TOL, STATE_TRACE_TOL};
use crate::error::{Error, Result};

/// Sub-normalized positive semidefinite operator.
#[derive(Clone, Debug)]
pub struct QuantumState {
    op: HermitianOperator,
    pure: OnceLock<bool>,
}

impl PartialEq for QuantumState {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op
    }
}

impl QuantumState {
    /// Checks λ_min ≥ −1e-9 and tr ∈ [0, 1 + 1e-9].
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if !(-STATE_TRACE_TOL..=1.0 + STATE_TRACE_TOL).contains(&tr) {
            return Err(Error::InvalidState(format!("trace {tr} outside [0, 1]")));
        }
        let lmin = op.min_eigenvalue();
        if lmin < -STATE_EIG_TOL {
            return Err(Error::InvalidState(format!("smallest eigenvalue {lmin:.3e} is negative")));
        }
        Ok(QuantumState { op, pure: OnceLock::new() })
    }

    pub fn from_matrix(layout: SystemLayout, m: CMat) -> Result<Self> {
        Self::new(HermitianOperator::new(layout, m)?)
    }

    /// Projects numerically perturbed output (solver witnesses) into the state set:
    /// negative eigenvalues clipped, trace capped at 1.
    pub fn clamped(op: HermitianOperator) -> Result<Self> {
        let s = op.eig();
        let needs_clip = s.values.last().is_some_and(|&v| v < 0.0);
        let op = if needs_clip { HermitianOperator::from_parts(op.layout().clone(), s.apply(|x| x.max(0.0))) } else { op };
        let tr = op.trace();
        let op = if tr > 1.0 { op.scale(1.0 / tr) } else { op };
        Self::new(op)
    }

    /// π = 1/d.
    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.dim() as f64;
        QuantumState { op: HermitianOperator::identity(layout).scale(1.0 / d), pure: OnceLock::new() }
    }

    /// |k⟩⟨k| in the computational basis.
    pub fn basis(layout: SystemLayout, k: usize) -> Result<Self> {
        let d = layout.dim();
        if k >= d {
            return Err(Error::invalid(format!("basis index {k} out of range {d}")));
        }
        let mut diag = vec![0.0; d];
        diag[k] = 1.0;
        Self::new(HermitianOperator::from_real_diagonal(layout, &diag)?)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn layout(&self) -> &SystemLayout {
        self.op.layout()
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace()
    }

    /// Rank one within the degeneracy tolerance (cached).
    pub fn is_pure(&self) -> bool {
        *self.pure.get_or_init(|| {
            let v = self.op.eig().values;
            v.first().is_some_and(|&l| l > DEGENERACY_TOL) && v.iter().skip(1).all(|&l| l.abs() <= 1e-9)
        })
    }

    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        Self::clamped(self.op.partial_trace(keep)?)
    }

    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        Ok(QuantumState { op: self.op.permute(order)?, pure: OnceLock::new() })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::new(self.op.tensor(&other.op)?)
    }

    pub fn relabel(&self, layout: SystemLayout) -> Result<Self> {
        Ok(QuantumState { op: self.op.relabel(layout)?, pure: OnceLock::new() })
    }

    /// ΠρΠ for a projector (or contraction) Π.
    pub fn project(&self, p: &HermitianOperator) -> Result<Self> {
        Self::clamped(self.op.sandwich(p)?)
    }

    /// Direct-sum padding of one factor.
    pub fn pad_factor(&self, label: &str, new_dim: usize) -> Result<Self> {
        Ok(QuantumState { op: self.op.pad_factor(label, new_dim)?, pure: OnceLock::new() })
    }

    /// Scale by a factor keeping the state sub-normalized.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.op.scale(s))
    }
}

/// Pure (possibly sub-normalized) vector over a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: SystemLayout,
    v: CVec,
}

impl PureState {
    /// Norm must lie in (0, 1 + 1e-9].
    pub fn new(layout: SystemLayout, v: CVec) -> Result<Self> {
        if v.len() != layout.dim() {
            return Err(Error::Dimension(format!("vector of length {} for dimension {}", v.len(), layout.dim())));
        }
        let n = v.norm();
        if !(n > 0.0 && n <= 1.0 + STATE_TRACE_TOL) {
            return Err(Error::InvalidState(format!("vector norm {n} outside (0, 1]")));
        }
        Ok(PureState { layout, v })
    }

    /// (1/√d) Σ_k |k⟩|k⟩ on two factors of dimension d.
    pub fn maximally_entangled(a: &str, b: &str, d: usize) -> Result<Self> {
        let layout = SystemLayout::new([(a, d), (b, d)])?;
        let mut v = CVec::zeros(d * d);
        for k in 0..d {
            v[k * d + k] = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        }
        Self::new(layout, v)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn vector(&self) -> &CVec {
        &self.v
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    /// |ψ⟩⟨ψ|.
    pub fn density(&self) -> QuantumState {
        let op = HermitianOperator::from_parts(self.layout.clone(), &self.v * self.v.adjoint());
        QuantumState { op, pure: OnceLock::from(true) }
    }

    /// Reduced state on the listed factors.
    pub fn reduced<S: AsRef<str>>(&self, keep: &[S]) -> Result<QuantumState> {
        let out_layout = self.layout.restrict(keep)?;
        let positions = self.layout.positions(&out_layout.labels())?;
        let split = IndexSplit::new(&self.layout, &positions);
        // ψ reshaped as keep × rest; reduced = M M†
        let mut m = CMat::zeros(split.keep_dim, split.rest_dim);
        for i in 0..self.v.len() {
            m[(split.keep[i], split.rest[i])] = self.v[i];
        }
        QuantumState::clamped(HermitianOperator::from_parts(out_layout, &m * m.adjoint()))
    }

    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.layout.len() {
            return Err(Error::Layout("permutation must list every factor".into()));
        }
        let layout = self.layout.reorder(order)?;
        let split = IndexSplit::new(&self.layout, &self.layout.positions(order)?);
        let mut v = CVec::zeros(self.v.len());
        for i in 0..self.v.len() {
            v[split.keep[i]] = self.v[i];
        }
        Ok(PureState { layout, v })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Self::new(layout, self.v.kronecker(&other.v))
    }

    /// (1 ⊗ P)|ψ⟩ for an operator acting on a sub-layout.
    pub fn apply_local(&self, op: &HermitianOperator) -> Result<CVec> {
        let full = op.embed(&self.layout)?;
        Ok(full.matrix() * &self.v)
    }

    pub fn pad_factor(&self, label: &str, new_dim: usize) -> Result<Self> {
        let layout = self.layout.with_dim(label, new_dim)?;
        let map = pad_index_map(&self.layout, &layout);
        let mut v = CVec::zeros(layout.dim());
        for (i, &j) in map.iter().enumerate() {
            v[j] = self.v[i];
        }
        Ok(PureState { layout, v })
    }
}

/// F(ρ, σ) = ‖√ρ√σ‖₁.
pub fn fidelity(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    check_same(rho, sigma)?;
    Ok(fidelity_psd(rho.matrix(), sigma.matrix()).min(1.0))
}

/// F̄ = F + √((1 − tr ρ)(1 − tr σ)).
pub fn generalized_fidelity(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    let a = (1.0 - rho.trace()).max(0.0);
    let b = (1.0 - sigma.trace()).max(0.0);
    Ok((f + (a * b).sqrt()).min(1.0))
}

/// P(ρ, σ) = √(1 − F̄²).
pub fn purified_distance(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    let f = generalized_fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

fn check_same(a: &QuantumState, b: &QuantumState) -> Result<()> {
    if a.layout() != b.layout() {
        return Err(Error::Layout(format!("`{}` vs `{}`", a.layout().describe(), b.layout().describe())));
    }
    Ok(())
}

/// Purification on `layout ⊗ R` with R of dimension rank(ρ).
pub fn purify(rho: &QuantumState) -> Result<PureState> {
    let label = rho.layout().fresh_label("R");
    purify_with(rho, &label, 0)
}

/// Purification with a named purifying factor of dimension max(rank ρ, min_dim).
pub fn purify_with(rho: &QuantumState, label: &str, min_dim: usize) -> Result<PureState> {
    if rho.trace() <= 0.0 {
        return Err(Error::InvalidState("cannot purify the zero operator".into()));
    }
    let s = rho.op().eig();
    let kept: Vec<usize> = (0..s.values.len()).filter(|&k| s.values[k] > DEGENERACY_TOL).collect();
    if kept.is_empty() {
        return Err(Error::InvalidState("state has no eigenvalue above tolerance".into()));
    }
    let r = kept.len().max(min_dim);
    let layout = rho.layout().concat(&SystemLayout::single(label, r)?)?;
    let d = rho.dim();
    let mut v = CVec::zeros(d * r);
    for (col, &k) in kept.iter().enumerate() {
        let w = s.values[k].sqrt();
        for i in 0..d {
            v[i * r + col] += s.vectors[(i, k)] * w;
        }
    }
    PureState::new(layout, v)
}

/// Matrix Ψ with |ψ⟩ = Σ Ψ[x,y] |x⟩_group|y⟩_rest, so that the reduced state on `group` is ΨΨ†.
fn reshape(psi: &PureState, group: &[String]) -> Result<(CMat, IndexSplit)> {
    let pos = psi.layout().positions(group)?;
    let split = IndexSplit::new(psi.layout(), &pos);
    let mut m = CMat::zeros(split.keep_dim, split.rest_dim);
    for i in 0..psi.vector().len() {
        m[(split.keep[i], split.rest[i])] = psi.vector()[i];
    }
    Ok((m, split))
}

/// Extension σ̄ of σ with P(ρ̄, σ̄) = P(ρ, σ), built from purifications and the Uhlmann-optimal isometry.
pub fn matching_extension(rho_ext: &QuantumState, rho: &QuantumState, sigma: &QuantumState) -> Result<QuantumState> {
    check_same(rho, sigma)?;
    let h_labels = rho.layout().labels();
    for f in rho.layout().factors() {
        if rho_ext.layout().dim_of(&f.label)? != f.dim {
            return Err(Error::Dimension(format!("factor `{}` differs in dimension", f.label)));
        }
    }
    let marginal = rho_ext.op().partial_trace(&h_labels)?.permute(&h_labels)?;
    let dev = (marginal.matrix() - rho.matrix()).camax();
    if dev > 1e-8 {
        return Err(Error::Precondition(format!("extension does not reduce to ρ (deviation {dev:.3e})")));
    }
    let ext_labels = rho_ext.layout().labels();
    let hp_labels = rho_ext.layout().complement(&h_labels);
    let d_hp: usize = hp_labels.iter().map(|l| rho_ext.layout().dim_of(l).unwrap()).product();

    let rank_sigma = sigma.op().rank().max(1);
    let r_label = rho_ext.layout().fresh_label("R");
    let r_min = rank_sigma.div_ceil(d_hp).max(1);
    let psi_rho = purify_with(rho_ext, &r_label, r_min)?;
    let s_label = sigma.layout().fresh_label("S");
    let psi_sigma = purify_with(sigma, &s_label, 1)?;

    // Ψ_ρ : H × (H'R), Ψ_σ : H × S
    let (m_rho, split_rho) = reshape(&psi_rho, &h_labels)?;
    let (m_sigma, _) = reshape(&psi_sigma, &h_labels)?;
    let n = m_rho.adjoint() * &m_sigma; // (H'R) × S
    let d_k = n.nrows();
    let d_s = n.ncols();
    let svd = n.clone().svd(true, true);
    let p = svd.u.expect("requested");
    let q_adj = svd.v_t.expect("requested");
    // U = Q P† maximizes Re tr(N U) over co-isometries; the extended purification of σ is Ψ_σ U.
    let k = p.ncols();
    let mut u = CMat::zeros(d_s, d_k);
    if k == d_s {
        u = q_adj.adjoint() * p.adjoint();
    } else {
        // rank-deficient N: complete the partial isometry on the orthogonal complements
        u += q_adj.adjoint() * p.adjoint();
        let q_perp = orth_complement(&q_adj.adjoint());
        let p_perp = orth_complement(&p);
        let extra = q_perp.ncols().min(p_perp.ncols());
        for c in 0..extra {
            u += q_perp.column(c) * p_perp.column(c).adjoint();
        }
    }
    let m_bar = &m_sigma * u; // H × (H'R)

    let layout = psi_rho.layout().clone();
    let mut v = CVec::zeros(layout.dim());
    for i in 0..v.len() {
        v[i] = m_bar[(split_rho.keep[i], split_rho.rest[i])];
    }
    let full = PureState::new(layout, v)?;
    full.reduced(&ext_labels)?.permute(&ext_labels)
}

/// Orthonormal basis of the complement of the column span of an isometry.
fn orth_complement(cols: &CMat) -> CMat {
    let n = cols.nrows();
    let proj = CMat::identity(n, n) - cols * cols.adjoint();
    let s = Spectrum::of(&proj);
    let keep: Vec<usize> = (0..n).filter(|&k| s.values[k] > 0.5).collect();
    let mut out = CMat::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        out.set_column(c, &s.vectors.column(k));
    }
    out
}

/// √ρ as an operator with the state's layout.
pub fn state_sqrt(rho: &QuantumState) -> HermitianOperator {
    HermitianOperator::from_parts(rho.layout().clone(), psd_sqrt(rho.matrix()))
}

#[allow(dead_code)]
pub(crate) fn basis_vector(d: usize, k: usize) -> CVec {
    let mut v = CVec::from_element(d, ZERO);
    v[k] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random::{random_pure, random_state};

    fn lay(spec: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(spec.iter().map(|&(l, d)| (l, d))).unwrap()
    }

    #[test]
    fn state_invariants_enforced() {
        let l = lay(&[("A", 2)]);
        assert!(QuantumState::new(HermitianOperator::identity(l.clone())).is_err());
        assert!(QuantumState::new(HermitianOperator::from_real_diagonal(l.clone(), &[1.0, -0.1]).unwrap()).is_err());
        assert!(QuantumState::new(HermitianOperator::from_real_diagonal(l, &[0.5, 0.2]).unwrap()).is_ok());
    }

    #[test]
    fn fidelity_examples() {
        let l = lay(&[("A", 2)]);
        let z = QuantumState::basis(l.clone(), 0).unwrap();
        let o = QuantumState::basis(l.clone(), 1).unwrap();
        let pi = QuantumState::maximally_mixed(l);
        assert!(fidelity(&z, &o).unwrap().abs() < 1e-12);
        assert!((fidelity(&z, &pi).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let rho = random_state(&lay(&[("A", 3)]), 2, 3).unwrap().scaled(0.7).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 0.7).abs() < 1e-9);
        assert!((purified_distance(&z, &o).unwrap() - 1.0).abs() < 1e-12);
        assert!((purified_distance(&z, &pi).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(purified_distance(&rho, &rho).unwrap() < 1e-6);
    }

    #[test]
    fn fidelity_is_symmetric() {
        let l = lay(&[("A", 2), ("B", 2)]);
        let a = random_state(&l, 3, 1).unwrap();
        let b = random_state(&l, 4, 2).unwrap();
        assert!((fidelity(&a, &b).unwrap() - fidelity(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn purification_round_trip() {
        let l = lay(&[("A", 2), ("B", 3)]);
        let rho = random_state(&l, 4, 11).unwrap();
        let psi = purify(&rho).unwrap();
        assert_eq!(psi.layout().dim_of("R").unwrap(), 4);
        let back = psi.reduced(&["A", "B"]).unwrap();
        assert!((back.matrix() - rho.matrix()).camax() < 1e-9);
        let pure = random_pure(&l, 5).unwrap().density();
        assert_eq!(purify(&pure).unwrap().layout().dim_of("R").unwrap(), 1);
        let pi = QuantumState::maximally_mixed(lay(&[("A", 2)]));
        let phi = purify(&pi).unwrap();
        let red = phi.reduced(&["R"]).unwrap();
        assert!((red.matrix() - CMat::identity(2, 2) * Complex64::new(0.5, 0.0)).camax() < 1e-12);
        assert!((phi.density().partial_trace(&["A"]).unwrap().matrix() - pi.matrix()).camax() < 1e-12);
    }

    #[test]
    fn matching_extension_preserves_distance() {
        let h = lay(&[("A", 2)]);
        let ext_l = lay(&[("A", 2), ("B", 2)]);
        for seed in 0..5 {
            let rho_bar = random_state(&ext_l, 3, 100 + seed).unwrap();
            let rho = rho_bar.partial_trace(&["A"]).unwrap();
            let sigma = random_state(&h, 2, 200 + seed).unwrap();
            let sb = matching_extension(&rho_bar, &rho, &sigma).unwrap();
            let marg = sb.partial_trace(&["A"]).unwrap();
            assert!((marg.matrix() - sigma.matrix()).camax() < 1e-9);
            let p0 = purified_distance(&rho, &sigma).unwrap();
            let p1 = purified_distance(&rho_bar, &sb).unwrap();
            assert!((p0 - p1).abs() < 1e-6, "{p0} vs {p1}");
        }
        let rho_bar = random_state(&ext_l, 4, 9).unwrap();
        let rho = rho_bar.partial_trace(&["A"]).unwrap();
        let same = matching_extension(&rho_bar, &rho, &rho).unwrap();
        assert!(purified_distance(&same, &rho_bar).unwrap() < 1e-6);
    }

    #[test]
    fn matching_extension_rejects_wrong_marginal() {
        let ext_l = lay(&[("A", 2), ("B", 2)]);
        let rho_bar = random_state(&ext_l, 2, 1).unwrap();
        let other = random_state(&lay(&[("A", 2)]), 2, 2).unwrap();
        assert!(matches!(matching_extension(&rho_bar, &other, &other), Err(Error::Precondition(_))));
    }

    #[test]
    fn pure_state_reduced_and_permute() {
        let l = lay(&[("A", 2), ("B", 3)]);
        let psi = random_pure(&l, 3).unwrap();
        let a = psi.reduced(&["A"]).unwrap();
        let a2 = psi.density().partial_trace(&["A"]).unwrap();
        assert!((a.matrix() - a2.matrix()).camax() < 1e-14);
        let p = psi.permute(&["B", "A"]).unwrap();
        let a3 = p.reduced(&["A"]).unwrap();
        assert!((a3.matrix() - a.matrix()).camax() < 1e-14);
    }
}
