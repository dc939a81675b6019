//! Seeded generators for test harnesses and campaigns.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::hermitian::{CMat, CVec, HermitianOperator};
use super::layout::SystemLayout;
use super::state::{PureState, QuantumState};
use crate::error::{Error, Result};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Complex Ginibre matrix.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

/// GG†/tr(GG†) with G of size d × rank.
pub fn random_state(layout: &SystemLayout, rank: usize, seed: u64) -> Result<QuantumState> {
    random_state_with(layout, rank, &mut rng(seed))
}

pub fn random_state_with(layout: &SystemLayout, rank: usize, rng: &mut ChaCha8Rng) -> Result<QuantumState> {
    let d = layout.dim();
    if rank == 0 || rank > d {
        return Err(Error::invalid(format!("rank {rank} outside 1..={d}")));
    }
    let g = gaussian_matrix(d, rank, rng);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    let m = m / Complex64::new(tr, 0.0);
    QuantumState::new(HermitianOperator::from_parts(layout.clone(), m))
}

/// Normalized Gaussian vector.
pub fn random_pure(layout: &SystemLayout, seed: u64) -> Result<PureState> {
    random_pure_with(layout, &mut rng(seed))
}

pub fn random_pure_with(layout: &SystemLayout, rng: &mut ChaCha8Rng) -> Result<PureState> {
    let d = layout.dim();
    let mut v = CVec::from_iterator(d, (0..d).map(|_| gaussian(rng)));
    let n = v.norm();
    v /= Complex64::new(n, 0.0);
    PureState::new(layout.clone(), v)
}

/// Hermitian matrix with Gaussian entries (GUE-like, unnormalized).
pub fn random_hermitian(layout: &SystemLayout, seed: u64) -> HermitianOperator {
    let d = layout.dim();
    let g = gaussian_matrix(d, d, &mut rng(seed));
    HermitianOperator::from_parts(layout.clone(), (&g + g.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Orthogonal projector onto a random subspace of the given rank.
pub fn random_projector(layout: &SystemLayout, rank: usize, rng: &mut ChaCha8Rng) -> Result<HermitianOperator> {
    let d = layout.dim();
    if rank > d {
        return Err(Error::invalid(format!("rank {rank} exceeds dimension {d}")));
    }
    if rank == 0 {
        return Ok(HermitianOperator::zeros(layout.clone()));
    }
    let g = gaussian_matrix(d, rank, rng);
    let q = g.qr().q();
    Ok(HermitianOperator::from_parts(layout.clone(), &q * q.adjoint()))
}

/// Random PSD matrix GG† scaled to unit trace, any rank.
pub fn random_psd(layout: &SystemLayout, rank: usize, rng: &mut ChaCha8Rng) -> Result<HermitianOperator> {
    Ok(random_state_with(layout, rank, rng)?.into_op())
}
