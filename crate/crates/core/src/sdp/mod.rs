//! Semidefinite programs over Hermitian blocks and a primal-dual interior-point solver.
//!
//! Programs are stated with complex Hermitian coefficients. The solver works on the real
//! embedding `H ↦ [[Re H, −Im H], [Im H, Re H]]`; 1×1 blocks stay real.

mod problem;
mod solver;

pub use problem::{
    from_hermitian_coordinates, hermitian_basis, hermitian_coordinates, Block, BlockId, Constraint, GroupId,
    LinearMap, MatrixGroup, Relation, SdpProblem, Sense, SparseHermitian, Term,
};
pub use solver::{check_weak_duality, solve, solve_with, IterateLog, SdpSolution, SolveStatus, SolverOptions};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{complexify_matrix, CMat, HermitianOperator};

pub fn realify(h: &HermitianOperator) -> DMatrix<f64> {
    h.realify()
}

/// Inverse of [`realify`]; rejects odd or non-symmetric input.
pub fn complexify(r: &DMatrix<f64>) -> Result<CMat> {
    if r.nrows() != r.ncols() || r.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!("{}×{} is not a real embedding", r.nrows(), r.ncols())));
    }
    let asym = (r - r.transpose()).amax();
    if asym > 1e-10 {
        return Err(Error::NotHermitian(asym));
    }
    Ok(complexify_matrix(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random::random_hermitian;
    use crate::operator::{fidelity_psd, random_state, QuantumState, Spectrum, SystemLayout};
    use num_complex::Complex64;

    fn diag(v: &[f64]) -> SparseHermitian {
        SparseHermitian { dim: v.len(), entries: v.iter().enumerate().map(|(i, &x)| (i, i, [x, 0.0])).collect() }
    }

    #[test]
    fn trace_constraint_forces_value() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_objective(x, SparseHermitian::identity(2));
        p.add_constraint(vec![(x, SparseHermitian::identity(2))], Relation::Eq, 1.0);
        let s = solve(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.primal_objective - 1.0).abs() < 1e-7);
        assert!(check_weak_duality(&s).unwrap());
    }

    #[test]
    fn smallest_eigenvalue() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_objective(x, diag(&[1.0, 2.0]));
        p.add_constraint(vec![(x, SparseHermitian::identity(2))], Relation::Eq, 1.0);
        let s = solve(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.primal_objective - 1.0).abs() < 1e-7);
        let xm = s.block(x);
        assert!((xm[(0, 0)].re - 1.0).abs() < 1e-6 && xm[(1, 1)].re.abs() < 1e-6);
        assert!(s.gap.abs() <= 1e-7 * (1.0 + s.primal_objective.abs()));
        assert!(s.primal_residual <= 1e-7 && s.dual_residual <= 1e-7);
    }

    #[test]
    fn maximization_and_inequalities() {
        // max ⟨H, X⟩ s.t. tr X ≤ 1 equals λmax(H)⁺
        let l = SystemLayout::new([("A", 3)]).unwrap();
        let h = random_hermitian(&l, 11);
        let mut p = SdpProblem::new(Sense::Maximize);
        let x = p.add_block("X", 3);
        p.add_objective(x, SparseHermitian::from_dense(h.matrix()));
        p.add_constraint(vec![(x, SparseHermitian::identity(3))], Relation::Le, 1.0);
        let s = solve(&p).unwrap();
        assert!(s.is_optimal());
        let lmax = h.max_eigenvalue().max(0.0);
        assert!((s.primal_objective - lmax).abs() < 1e-7, "{} vs {lmax}", s.primal_objective);
        assert!((s.dual_objective - lmax).abs() < 1e-7);
        assert!(s.dual[0] >= -1e-9);
        assert!(check_weak_duality(&s).unwrap());
    }

    #[test]
    fn lemma2_program_matches_fidelity() {
        // max ⟨ρ, X⟩ s.t. tr_C X + W = 1⊗σ with C trivial reduces to F(ρ, 1⊗σ)²
        let ab = SystemLayout::new([("A", 2), ("B", 2)]).unwrap();
        let b = SystemLayout::new([("B", 2)]).unwrap();
        let rho = random_state(&ab, 4, 5).unwrap();
        let sigma = random_state(&b, 2, 6).unwrap();
        let target = sigma.op().embed(&ab).unwrap();
        // purification R of ρ, X lives on ABR
        let psi = crate::operator::purify(&rho).unwrap();
        let abr = psi.layout().clone();
        let rbar = psi.density();
        let mut p = SdpProblem::new(Sense::Maximize);
        let x = p.add_block("X", abr.dim());
        let w = p.add_block("W", 4);
        p.add_objective(x, SparseHermitian::from_dense(rbar.matrix()));
        p.add_matrix_constraint(
            "sigma",
            vec![
                (x, 1.0, LinearMap::PartialTrace { full: abr.clone(), keep: vec!["A".into(), "B".into()] }),
                (w, 1.0, LinearMap::Identity),
            ],
            Relation::Eq,
            target.matrix(),
        )
        .unwrap();
        let s = solve(&p).unwrap();
        assert!(s.is_optimal(), "{:?}", s.status);
        let f = fidelity_psd(rho.matrix(), target.matrix());
        assert!((s.primal_objective - f * f).abs() < 1e-6, "{} vs {}", s.primal_objective, f * f);
        assert!((s.log2_value() - (f * f).log2()).abs() < 1e-5);
        assert!((s.primal_objective - s.dual_objective).abs() < 1e-6);
        // dual Z: Z ⊗ 1_R ⪰ ρ̄, Z ⪰ 0
        let z = s.dual_matrix(&p, GroupId(0));
        let zh = HermitianOperator::new(ab.clone(), z).unwrap();
        let zr = zh.embed(&abr).unwrap();
        let gap = Spectrum::of(&(zr.matrix() - rbar.matrix())).values.last().copied().unwrap();
        assert!(gap > -1e-6);
    }

    #[test]
    fn weak_duality_paths() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_objective(x, diag(&[1.0, 2.0]));
        p.add_constraint(vec![(x, SparseHermitian::identity(2))], Relation::Eq, 1.0);
        let mut s = solve(&p).unwrap();
        // suboptimal but feasible pair: X = 1/2, y = 0.5 (S = diag(0.5, 1.5))
        let mut hand = s.clone();
        hand.primal = vec![CMat::identity(2, 2) * Complex64::new(0.5, 0.0)];
        hand.dual = vec![0.5];
        hand.slack = vec![CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(1.5, 0.0)]))];
        hand.primal_objective = 1.5;
        hand.dual_objective = 0.5;
        hand.gap = 1.0;
        assert!(check_weak_duality(&hand).unwrap());
        s.slack[0][(0, 0)] = Complex64::new(-1.0, 0.0);
        assert!(check_weak_duality(&s).is_err());
        s.primal.clear();
        assert!(check_weak_duality(&s).is_err());
    }

    #[test]
    fn iterates_keep_positive_complementarity() {
        let l = SystemLayout::new([("A", 2), ("B", 2)]).unwrap();
        let rho = random_state(&l, 4, 9).unwrap();
        let mut p = SdpProblem::new(Sense::Minimize);
        let b = SystemLayout::new([("B", 2)]).unwrap();
        let sig = p.add_block("sigma", 2);
        p.add_objective(sig, SparseHermitian::identity(2));
        p.add_matrix_constraint("dom", vec![(sig, 1.0, LinearMap::Embed { sub: b, full: l })], Relation::Ge, rho.matrix())
            .unwrap();
        let s = solve(&p).unwrap();
        assert!(s.is_optimal());
        assert!(s.log.iter().all(|it| it.complementarity >= 0.0));
        let again = solve(&p).unwrap();
        assert_eq!(serde_json::to_string(&s.log).unwrap(), serde_json::to_string(&again.log).unwrap());
    }

    #[test]
    fn dump_restore_solves_identically() {
        let l = SystemLayout::new([("A", 2), ("B", 2)]).unwrap();
        let rho = QuantumState::maximally_mixed(l.clone());
        let b = SystemLayout::new([("B", 2)]).unwrap();
        let mut p = SdpProblem::new(Sense::Minimize);
        let sig = p.add_block("sigma", 2);
        p.add_objective(sig, SparseHermitian::identity(2));
        p.add_matrix_constraint("dom", vec![(sig, 1.0, LinearMap::Embed { sub: b, full: l })], Relation::Ge, rho.matrix())
            .unwrap();
        let q = SdpProblem::from_json(&p.to_json().unwrap()).unwrap();
        let (s1, s2) = (solve(&p).unwrap(), solve(&q).unwrap());
        assert_eq!(s1.primal_objective.to_bits(), s2.primal_objective.to_bits());
        assert!((s1.primal_objective - 0.5).abs() < 1e-7);
    }

    #[test]
    fn infeasible_program_is_flagged() {
        // tr X = −1 with X ⪰ 0
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_objective(x, SparseHermitian::identity(2));
        p.add_constraint(vec![(x, SparseHermitian::identity(2))], Relation::Eq, -1.0);
        let s = solve(&p).unwrap();
        assert_ne!(s.status, SolveStatus::Optimal);
        assert!(s.clone().require_optimal("test").unwrap_err().is_solver_failure());
    }

    #[test]
    fn realify_contract() {
        let l = SystemLayout::new([("A", 3)]).unwrap();
        let h = random_hermitian(&l, 2);
        let r = realify(&h);
        assert!((r.trace() - 2.0 * h.trace()).abs() < 1e-12);
        let mut ev: Vec<f64> = r.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let hv = h.eig().values;
        for (k, v) in ev.iter().enumerate() {
            assert!((v - hv[k / 2]).abs() < 1e-9);
        }
        assert!((complexify(&r).unwrap() - h.matrix()).camax() < 1e-15);
        let id = realify(&HermitianOperator::identity(l));
        assert_eq!(id, DMatrix::<f64>::identity(6, 6));
        assert!(complexify(&DMatrix::<f64>::zeros(3, 3)).is_err());
    }
}
