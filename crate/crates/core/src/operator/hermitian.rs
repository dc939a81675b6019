use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::layout::{IndexSplit, SystemLayout};
use super::{DEGENERACY_TOL, HERMITIAN_TOL};
use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex Hermitian matrix over a labelled tensor-product layout.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    layout: SystemLayout,
    m: CMat,
}

/// Largest entrywise deviation |H − H†|.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// (M + M†)/2.
pub fn symmetrize(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

impl HermitianOperator {
    /// Validates Hermiticity within 1e-10 (entrywise), then symmetrizes.
    pub fn new(layout: SystemLayout, m: CMat) -> Result<Self> {
        let d = layout.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, layout `{}` has dimension {d}",
                m.nrows(),
                m.ncols(),
                layout.describe()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(HermitianOperator { layout, m: symmetrize(&m) })
    }

    /// Symmetrizes without validation; for results Hermitian by construction.
    pub(crate) fn from_parts(layout: SystemLayout, m: CMat) -> Self {
        debug_assert_eq!(m.nrows(), layout.dim());
        HermitianOperator { layout, m: symmetrize(&m) }
    }

    pub fn from_real_diagonal(layout: SystemLayout, diag: &[f64]) -> Result<Self> {
        if diag.len() != layout.dim() {
            return Err(Error::Dimension(format!("{} diagonal entries for dimension {}", diag.len(), layout.dim())));
        }
        let m = CMat::from_diagonal(&CVec::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0))));
        Ok(HermitianOperator { layout, m })
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.dim();
        HermitianOperator { layout, m: CMat::identity(d, d) }
    }

    pub fn zeros(layout: SystemLayout) -> Self {
        let d = layout.dim();
        HermitianOperator { layout, m: CMat::zeros(d, d) }
    }

    /// |v⟩⟨v|.
    pub fn outer(layout: SystemLayout, v: &CVec) -> Result<Self> {
        if v.len() != layout.dim() {
            return Err(Error::Dimension(format!("vector of length {} for dimension {}", v.len(), layout.dim())));
        }
        Ok(HermitianOperator::from_parts(layout, v * v.adjoint()))
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    /// Same matrix under a relabelled layout of equal dimensions.
    pub fn relabel(&self, layout: SystemLayout) -> Result<Self> {
        if layout.dims() != self.layout.dims() {
            return Err(Error::Dimension(format!("cannot relabel `{}` as `{}`", self.layout.describe(), layout.describe())));
        }
        Ok(HermitianOperator { layout, m: self.m.clone() })
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOperator { layout: self.layout.clone(), m: &self.m * Complex64::new(s, 0.0) }
    }

    fn same_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout(format!("`{}` vs `{}`", self.layout.describe(), other.layout.describe())));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        Ok(HermitianOperator { layout: self.layout.clone(), m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        Ok(HermitianOperator { layout: self.layout.clone(), m: &self.m - &other.m })
    }

    /// Real inner product tr(self · other).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_layout(other)?;
        Ok(trace_product(&self.m, &other.m))
    }

    /// P·self·P for Hermitian `p` (typically a projector).
    pub fn sandwich(&self, p: &Self) -> Result<Self> {
        self.same_layout(p)?;
        Ok(HermitianOperator::from_parts(self.layout.clone(), &p.m * &self.m * &p.m))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(HermitianOperator { layout, m: self.m.kronecker(&other.m) })
    }

    /// Trace over every factor not listed in `keep`.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        let out_layout = self.layout.restrict(keep)?;
        let positions = self.layout.positions(&out_layout.labels())?;
        if positions.len() == self.layout.len() {
            return Ok(self.clone());
        }
        let split = IndexSplit::new(&self.layout, &positions);
        let mut out = CMat::zeros(split.keep_dim, split.keep_dim);
        for group in split.groups() {
            for &(ka, ia) in &group {
                for &(kb, ib) in &group {
                    out[(ka, kb)] += self.m[(ia, ib)];
                }
            }
        }
        Ok(HermitianOperator::from_parts(out_layout, out))
    }

    /// Reorder factors; `order` must list every label exactly once.
    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.layout.len() {
            return Err(Error::Layout("permutation must list every factor".into()));
        }
        let new_layout = self.layout.reorder(order)?;
        let positions = self.layout.positions(order)?;
        let split = IndexSplit::new(&self.layout, &positions);
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(split.keep[i], split.keep[j])] = self.m[(i, j)];
            }
        }
        Ok(HermitianOperator { layout: new_layout, m: out })
    }

    /// self ⊗ 1 on the factors of `full` missing from self, arranged in `full`'s order.
    pub fn embed(&self, full: &SystemLayout) -> Result<Self> {
        for f in self.layout.factors() {
            if full.dim_of(&f.label)? != f.dim {
                return Err(Error::Dimension(format!("factor `{}` differs in dimension", f.label)));
            }
        }
        let positions = full.positions(&self.layout.labels())?;
        let split = IndexSplit::new(full, &positions);
        let mut out = CMat::zeros(full.dim(), full.dim());
        for group in split.groups() {
            for &(ka, ia) in &group {
                for &(kb, ib) in &group {
                    out[(ia, ib)] = self.m[(ka, kb)];
                }
            }
        }
        Ok(HermitianOperator { layout: full.clone(), m: out })
    }

    /// Direct-sum padding of one factor to a larger dimension (new basis vectors appended).
    pub fn pad_factor(&self, label: &str, new_dim: usize) -> Result<Self> {
        let old = self.layout.dim_of(label)?;
        if new_dim < old {
            return Err(Error::invalid("padding cannot shrink a factor"));
        }
        let new_layout = self.layout.with_dim(label, new_dim)?;
        let map = pad_index_map(&self.layout, &new_layout);
        let mut out = CMat::zeros(new_layout.dim(), new_layout.dim());
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out[(map[i], map[j])] = self.m[(i, j)];
            }
        }
        Ok(HermitianOperator { layout: new_layout, m: out })
    }

    pub fn eig(&self) -> Spectrum {
        Spectrum::of(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eig().values.last().unwrap_or(&0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eig().values.first().unwrap_or(&0.0)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.eig().values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// f applied to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        HermitianOperator { layout: self.layout.clone(), m: self.eig().apply(f) }
    }

    /// Spectral projector onto eigenvalues satisfying `pred`.
    pub fn spectral_projector(&self, pred: impl Fn(f64) -> bool) -> Self {
        self.map_spectrum(|x| if pred(x) { 1.0 } else { 0.0 })
    }

    /// Projector onto the support (eigenvalues above the degeneracy tolerance).
    pub fn support_projector(&self) -> Self {
        self.spectral_projector(|x| x > DEGENERACY_TOL)
    }

    /// Number of eigenvalues above the degeneracy tolerance.
    pub fn rank(&self) -> usize {
        self.eig().values.iter().filter(|&&v| v > DEGENERACY_TOL).count()
    }

    /// Real symmetric embedding [[Re, −Im], [Im, Re]].
    pub fn realify(&self) -> DMatrix<f64> {
        realify_matrix(&self.m)
    }
}

/// Maps basis index of `old` to the index in `new`, where `new` only enlarges factor dimensions.
pub(crate) fn pad_index_map(old: &SystemLayout, new: &SystemLayout) -> Vec<usize> {
    let od = old.dims();
    let nd = new.dims();
    let mut map = Vec::with_capacity(old.dim());
    let mut digits = vec![0usize; od.len()];
    for _ in 0..old.dim() {
        let mut idx = 0;
        for p in 0..od.len() {
            idx = idx * nd[p] + digits[p];
        }
        map.push(idx);
        for p in (0..od.len()).rev() {
            digits[p] += 1;
            if digits[p] < od[p] {
                break;
            }
            digits[p] = 0;
        }
    }
    map
}

/// Real part of tr(A·B) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    s
}

pub fn realify_matrix(m: &CMat) -> DMatrix<f64> {
    let n = m.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(i + n, j + n)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
        }
    }
    r
}

/// Inverse of [`realify_matrix`], averaging the redundant blocks.
pub fn complexify_matrix(r: &DMatrix<f64>) -> CMat {
    let n = r.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (r[(i, j)] + r[(i + n, j + n)]),
            0.5 * (r[(i + n, j)] - r[(i, j + n)]),
        )
    })
}

/// Shifts tried when a decomposition fails the trace and Frobenius identities. The plain
/// solver can return zeros or NaN on highly structured inputs such as large maximally
/// entangled projectors; a generic shift breaks the structure.
const EIG_SHIFTS: [f64; 4] = [0.0, 0.1234, -0.3719, 0.7071];

fn spectrum_consistent(vals: impl Iterator<Item = f64>, trace: f64, fro2: f64) -> bool {
    let (mut s1, mut s2) = (0.0, 0.0);
    for v in vals {
        if !v.is_finite() {
            return false;
        }
        s1 += v;
        s2 += v * v;
    }
    let tol = 1e-8 * (1.0 + fro2.sqrt());
    (s1 - trace).abs() <= tol * (1.0 + fro2.sqrt()) && (s2 - fro2).abs() <= tol * (1.0 + fro2.sqrt())
}

fn trace_and_fro<T: nalgebra::ComplexField<RealField = f64>>(m: &DMatrix<T>) -> (f64, f64, f64) {
    let n = m.nrows();
    let tr: f64 = (0..n).map(|i| m[(i, i)].clone().real()).sum();
    let fro2: f64 = m.iter().map(|x| x.clone().modulus_squared()).sum();
    (tr, fro2, fro2.sqrt().max(1e-300))
}

/// Symmetric/Hermitian eigen-decomposition with a consistency check and shifted retries.
pub(crate) fn checked_eigen<T: nalgebra::ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
) -> nalgebra::SymmetricEigen<T, nalgebra::Dyn> {
    let n = m.nrows();
    let (tr, fro2, scale) = trace_and_fro(m);
    let mut last = None;
    for shift in EIG_SHIFTS {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += T::from_real(shift * scale);
        }
        let mut e = nalgebra::SymmetricEigen::new(a);
        e.eigenvalues.iter_mut().for_each(|v| *v -= shift * scale);
        let vectors_finite = e.eigenvectors.iter().all(|x| x.clone().is_finite());
        if vectors_finite && spectrum_consistent(e.eigenvalues.iter().copied(), tr, fro2) {
            return e;
        }
        last = Some(e);
    }
    last.expect("at least one attempt")
}

/// Eigenvalues only, with the same safeguards as [`checked_eigen`].
pub(crate) fn checked_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let (tr, fro2, scale) = trace_and_fro(m);
    let mut last = None;
    for shift in EIG_SHIFTS {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += shift * scale;
        }
        let vals = a.symmetric_eigenvalues().map(|v| v - shift * scale);
        if spectrum_consistent(vals.iter().copied(), tr, fro2) {
            return vals;
        }
        last = Some(vals);
    }
    last.expect("at least one attempt")
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Column k is the eigenvector of `values[k]`.
    pub vectors: CMat,
}

impl Spectrum {
    pub fn of(m: &CMat) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Spectrum { values: Vec::new(), vectors: CMat::zeros(0, 0) };
        }
        let eig = checked_eigen(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (c, &k) in order.iter().enumerate() {
            vectors.set_column(c, &eig.eigenvectors.column(k));
        }
        Spectrum { values, vectors }
    }

    /// V·diag(f(λ))·V†.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = Complex64::new(f(self.values[k]), 0.0);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        symmetrize(&(scaled * self.vectors.adjoint()))
    }

    /// Eigenvalues grouped within the degeneracy tolerance, with their projectors.
    pub fn eigenprojectors(&self) -> Vec<(f64, CMat)> {
        let n = self.values.len();
        let mut out = Vec::new();
        let mut k = 0;
        while k < n {
            let mut end = k + 1;
            while end < n && (self.values[end] - self.values[k]).abs() <= DEGENERACY_TOL * self.values[k].abs().max(1.0) {
                end += 1;
            }
            let cols = self.vectors.columns(k, end - k);
            let p = &cols * cols.adjoint();
            let mean = self.values[k..end].iter().sum::<f64>() / (end - k) as f64;
            out.push((mean, symmetrize(&p)));
            k = end;
        }
        out
    }
}

/// Eigen-decomposition result with grouped eigenprojectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// All eigenvalues, descending, with multiplicity.
    pub values: Vec<f64>,
    /// Distinct eigenvalues (descending) and their orthogonal projectors.
    pub projectors: Vec<(f64, HermitianOperator)>,
}

impl EigenDecomposition {
    /// Σ λ_i P_i.
    pub fn reconstruct(&self) -> Option<HermitianOperator> {
        let (_, first) = self.projectors.first()?;
        let mut m = CMat::zeros(first.dim(), first.dim());
        for (l, p) in &self.projectors {
            m += p.matrix() * Complex64::new(*l, 0.0);
        }
        Some(HermitianOperator::from_parts(first.layout().clone(), m))
    }
}

/// Spectral decomposition with eigenvalues descending and eigenprojectors grouped
/// by the degeneracy tolerance.
pub fn eig_h(h: &HermitianOperator) -> EigenDecomposition {
    let s = h.eig();
    let projectors = s
        .eigenprojectors()
        .into_iter()
        .map(|(l, p)| (l, HermitianOperator::from_parts(h.layout().clone(), p)))
        .collect();
    EigenDecomposition { values: s.values, projectors }
}

/// Projector onto the eigenvectors with eigenvalue below −1e-10.
pub fn negative_projector(h: &HermitianOperator) -> HermitianOperator {
    h.spectral_projector(|x| x < -DEGENERACY_TOL)
}

/// Kronecker product with concatenated layout.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    a.tensor(b)
}

/// Partial trace keeping the listed factors.
pub fn partial_trace<S: AsRef<str>>(s: &HermitianOperator, keep: &[S]) -> Result<HermitianOperator> {
    s.partial_trace(keep)
}

/// PSD matrix power with clipping of negative eigenvalues; zero eigenvalues stay zero.
pub fn psd_power(m: &CMat, p: f64) -> CMat {
    Spectrum::of(m).apply(|x| if x > 0.0 { x.powf(p) } else { 0.0 })
}

pub fn psd_sqrt(m: &CMat) -> CMat {
    Spectrum::of(m).apply(|x| x.max(0.0).sqrt())
}

/// Moore-Penrose inverse square root on the support.
pub fn pinv_sqrt(m: &CMat) -> CMat {
    Spectrum::of(m).apply(|x| if x > DEGENERACY_TOL { 1.0 / x.sqrt() } else { 0.0 })
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Relative size, against λ_max, of eigenvalues treated as rounding noise by [`fidelity_psd`].
const FIDELITY_NOISE: f64 = 64.0 * f64::EPSILON;

/// √m with eigenvalues below FIDELITY_NOISE·λ_max set to zero: the square root would turn
/// rounding noise of size 1e-17 into contributions of size 3e-9.
fn denoised_sqrt(m: &CMat) -> CMat {
    let s = Spectrum::of(m);
    let cut = FIDELITY_NOISE * s.values.first().copied().unwrap_or(0.0).max(0.0);
    s.apply(|x| if x > cut { x.sqrt() } else { 0.0 })
}

/// Fidelity ‖√P√Q‖₁ of two PSD matrices (not necessarily states).
pub fn fidelity_psd(p: &CMat, q: &CMat) -> f64 {
    trace_norm(&(denoised_sqrt(p) * denoised_sqrt(q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random::random_hermitian;

    fn lay(spec: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(spec.iter().map(|&(l, d)| (l, d))).unwrap()
    }

    fn diag(l: SystemLayout, d: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(l, d).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(HermitianOperator::new(lay(&[("A", 2)]), m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn tensor_identity_and_diagonal() {
        let i2 = HermitianOperator::identity(lay(&[("A", 2)]));
        let j2 = HermitianOperator::identity(lay(&[("B", 2)]));
        let t = tensor(&i2, &j2).unwrap();
        assert_eq!(t.matrix(), &CMat::identity(4, 4));
        let t = tensor(&diag(lay(&[("A", 2)]), &[1.0, 0.0]), &diag(lay(&[("B", 2)]), &[0.0, 1.0])).unwrap();
        let d: Vec<f64> = t.matrix().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![0.0, 1.0, 0.0, 0.0]);
        assert!(tensor(&i2, &i2).is_err());
    }

    #[test]
    fn tensor_is_associative() {
        let a = random_hermitian(&lay(&[("A", 2)]), 1);
        let b = random_hermitian(&lay(&[("B", 2)]), 2);
        let c = random_hermitian(&lay(&[("C", 2)]), 3);
        let l = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let r = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        assert!((l.matrix() - r.matrix()).camax() < 1e-15);
    }

    #[test]
    fn partial_trace_against_brute_force() {
        let a = random_hermitian(&lay(&[("A", 2)]), 4);
        let b = random_hermitian(&lay(&[("B", 3)]), 5);
        let ab = tensor(&a, &b).unwrap();
        let got = ab.partial_trace(&["A"]).unwrap();
        let want = a.scale(b.trace());
        assert!((got.matrix() - want.matrix()).camax() < 1e-13);
        // brute-force contraction over B for a generic operator
        let x = random_hermitian(&lay(&[("A", 2), ("B", 3)]), 6);
        let tb = x.partial_trace(&["B"]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = ZERO;
                for k in 0..2 {
                    s += x.matrix()[(k * 3 + i, k * 3 + j)];
                }
                assert!((tb.matrix()[(i, j)] - s).norm() < 1e-14);
            }
        }
        assert!((tb.trace() - x.trace()).abs() < 1e-13);
        assert_eq!(x.partial_trace(&["A", "B"]).unwrap(), x);
    }

    #[test]
    fn permute_and_embed_are_consistent() {
        let a = random_hermitian(&lay(&[("A", 2)]), 7);
        let c = random_hermitian(&lay(&[("C", 3)]), 8);
        let full = lay(&[("A", 2), ("B", 2), ("C", 3)]);
        let ac = tensor(&a, &c).unwrap().embed(&full).unwrap();
        let direct = tensor(&tensor(&a, &HermitianOperator::identity(lay(&[("B", 2)]))).unwrap(), &c).unwrap();
        assert!((ac.matrix() - direct.matrix()).camax() < 1e-15);
        let ca = tensor(&c, &a).unwrap().permute(&["A", "C"]).unwrap();
        assert!((ca.matrix() - tensor(&a, &c).unwrap().matrix()).camax() < 1e-15);
    }

    #[test]
    fn eig_examples_and_reconstruction() {
        let e = eig_h(&diag(lay(&[("A", 2)]), &[1.0, 3.0]));
        assert_eq!(e.values.len(), 2);
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let e = eig_h(&HermitianOperator::identity(lay(&[("A", 3)])));
        assert_eq!(e.projectors.len(), 1);
        assert!((e.projectors[0].1.matrix() - CMat::identity(3, 3)).camax() < 1e-14);
        let h = random_hermitian(&lay(&[("A", 4), ("B", 4)]), 9);
        let e = eig_h(&h);
        let r = e.reconstruct().unwrap();
        let resid = r.sub(&h).unwrap().operator_norm();
        assert!(resid < 1e-9, "residual {resid}");
        let total: CMat = e.projectors.iter().fold(CMat::zeros(16, 16), |acc, (_, p)| acc + p.matrix());
        assert!((total - CMat::identity(16, 16)).camax() < 1e-9);
    }

    #[test]
    fn negative_projector_examples() {
        let l = lay(&[("A", 2)]);
        assert_eq!(negative_projector(&HermitianOperator::identity(l.clone())).trace(), 0.0);
        let p = negative_projector(&HermitianOperator::identity(l.clone()).scale(-1.0));
        assert!((p.matrix() - CMat::identity(2, 2)).camax() < 1e-14);
        let p = negative_projector(&diag(l, &[1.0, -2.0]));
        assert!((p.matrix()[(1, 1)].re - 1.0).abs() < 1e-14 && p.matrix()[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn structured_projector_spectrum() {
        // the unshifted solver returns a zero spectrum for this 64×64 rank-one projector
        let psi = crate::operator::PureState::maximally_entangled("A", "B", 8).unwrap().density();
        let e = psi.op().eig();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!(e.values[1..].iter().all(|v| v.abs() < 1e-12));
        assert!((e.apply(|x| x) - psi.matrix()).camax() < 1e-12);
    }

    #[test]
    fn realify_round_trip_and_spectrum() {
        let h = random_hermitian(&lay(&[("A", 3)]), 10);
        let r = h.realify();
        assert!((r.trace() - 2.0 * h.trace()).abs() < 1e-13);
        assert!((complexify_matrix(&r) - h.matrix()).camax() < 1e-15);
        let mut re: Vec<f64> = nalgebra::SymmetricEigen::new(r).eigenvalues.iter().copied().collect();
        re.sort_by(|a, b| b.total_cmp(a));
        let e = h.eig().values;
        for (k, v) in e.iter().enumerate() {
            assert!((re[2 * k] - v).abs() < 1e-9 && (re[2 * k + 1] - v).abs() < 1e-9);
        }
    }

    #[test]
    fn pad_factor_direct_sum() {
        let h = random_hermitian(&lay(&[("A", 2), ("B", 2)]), 11);
        let p = h.pad_factor("A", 3).unwrap();
        assert_eq!(p.layout().dims(), vec![3, 2]);
        assert!((p.trace() - h.trace()).abs() < 1e-14);
        assert!((p.matrix()[(1, 3)] - h.matrix()[(1, 3)]).norm() < 1e-15);
        assert_eq!(p.matrix()[(4, 4)], ZERO);
    }
}
