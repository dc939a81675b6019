use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMat, IndexSplit, SystemLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupId(pub usize);

/// Sparse Hermitian matrix; stores entries with `i ≤ j`, the lower triangle is implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseHermitian {
    pub dim: usize,
    pub entries: Vec<(usize, usize, [f64; 2])>,
}

impl SparseHermitian {
    pub fn zeros(dim: usize) -> Self {
        SparseHermitian { dim, entries: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        SparseHermitian { dim, entries: (0..dim).map(|i| (i, i, [1.0, 0.0])).collect() }
    }

    /// Upper triangle of a dense matrix; entries below 1e-300 in modulus dropped.
    pub fn from_dense(m: &CMat) -> Self {
        let n = m.nrows();
        let mut entries = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                let z = m[(i, j)];
                if z.norm() > 1e-300 {
                    entries.push((i, j, [z.re, if i == j { 0.0 } else { z.im }]));
                }
            }
        }
        SparseHermitian { dim: n, entries }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for &(i, j, [re, im]) in &self.entries {
            let z = Complex64::new(re, im);
            m[(i, j)] += z;
            if i != j {
                m[(j, i)] += z.conj();
            }
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseHermitian {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, [re, im])| (i, j, [re * s, im * s])).collect(),
        }
    }

    /// tr(self · X) for Hermitian X.
    pub fn inner(&self, x: &CMat) -> f64 {
        let mut s = 0.0;
        for &(i, j, [re, im]) in &self.entries {
            let z = Complex64::new(re, im);
            if i == j {
                s += re * x[(i, i)].re;
            } else {
                s += 2.0 * (z * x[(j, i)]).re;
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        for &(i, j, [re, im]) in &self.entries {
            if i > j || j >= self.dim {
                return Err(Error::Dimension(format!("coefficient entry ({i},{j}) invalid for dimension {}", self.dim)));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::invalid("non-finite coefficient"));
            }
            if i == j && im.abs() > 1e-12 {
                return Err(Error::NotHermitian(im.abs()));
            }
        }
        Ok(())
    }
}

/// Accumulates sparse Hermitian entries, normalizing to the upper triangle.
#[derive(Default)]
pub(crate) struct SparseBuilder {
    map: BTreeMap<(usize, usize), Complex64>,
}

impl SparseBuilder {
    pub fn push(&mut self, i: usize, j: usize, z: Complex64) {
        let (key, z) = if i <= j { ((i, j), z) } else { ((j, i), z.conj()) };
        *self.map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += z;
    }

    pub fn finish(self, dim: usize) -> SparseHermitian {
        let entries = self
            .map
            .into_iter()
            .filter(|(_, z)| z.norm() > 1e-300)
            .map(|((i, j), z)| (i, j, [z.re, if i == j { 0.0 } else { z.im }]))
            .collect();
        SparseHermitian { dim, entries }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub block: BlockId,
    pub coeff: SparseHermitian,
}

/// Σ_blocks tr(coeff · X_block)  (relation)  rhs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Rows generated from one Hermitian matrix constraint, in basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixGroup {
    pub name: String,
    pub dim: usize,
    pub first_row: usize,
}

/// Linear map from a block variable to the target space of a matrix constraint.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearMap {
    Identity,
    /// X on `sub` ↦ X ⊗ 1 arranged in `full`.
    Embed { sub: SystemLayout, full: SystemLayout },
    /// X on `full` ↦ partial trace keeping `keep` (output in `full` order).
    PartialTrace { full: SystemLayout, keep: Vec<String> },
}

impl LinearMap {
    fn dims(&self, block_dim: usize) -> Result<(usize, usize)> {
        match self {
            LinearMap::Identity => Ok((block_dim, block_dim)),
            LinearMap::Embed { sub, full } => {
                full.positions(&sub.labels())?;
                Ok((sub.dim(), full.dim()))
            }
            LinearMap::PartialTrace { full, keep } => Ok((full.dim(), full.restrict(keep)?.dim())),
        }
    }

    /// Adjoint applied to each Hermitian basis element of the target space.
    fn adjoint_basis(&self, basis: &[SparseHermitian], in_dim: usize) -> Result<Vec<SparseHermitian>> {
        match self {
            LinearMap::Identity => Ok(basis.to_vec()),
            LinearMap::Embed { sub, full } => {
                // adjoint: partial trace of the full-space basis element down to `sub`
                let split = IndexSplit::new(full, &full.positions(&sub.labels())?);
                Ok(basis
                    .iter()
                    .map(|f| {
                        let mut b = SparseBuilder::default();
                        for &(p, q, [re, im]) in &f.entries {
                            if split.rest[p] == split.rest[q] {
                                b.push(split.keep[p], split.keep[q], Complex64::new(re, im));
                            }
                        }
                        b.finish(in_dim)
                    })
                    .collect())
            }
            LinearMap::PartialTrace { full, keep } => {
                let out = full.restrict(keep)?;
                let split = IndexSplit::new(full, &full.positions(&out.labels())?);
                let mut inv = vec![0usize; full.dim()];
                for i in 0..full.dim() {
                    inv[split.keep[i] * split.rest_dim + split.rest[i]] = i;
                }
                Ok(basis
                    .iter()
                    .map(|f| {
                        let mut b = SparseBuilder::default();
                        for &(p, q, [re, im]) in &f.entries {
                            for r in 0..split.rest_dim {
                                b.push(inv[p * split.rest_dim + r], inv[q * split.rest_dim + r], Complex64::new(re, im));
                            }
                        }
                        b.finish(in_dim)
                    })
                    .collect())
            }
        }
    }
}

/// Orthonormal Hermitian basis in row order: E_ii, then for i < j the pair
/// (E_ij + E_ji)/√2 and (−iE_ij + iE_ji)/√2.
pub fn hermitian_basis(n: usize) -> Vec<SparseHermitian> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in i..n {
            if i == j {
                out.push(SparseHermitian { dim: n, entries: vec![(i, i, [1.0, 0.0])] });
            } else {
                out.push(SparseHermitian { dim: n, entries: vec![(i, j, [h, 0.0])] });
                out.push(SparseHermitian { dim: n, entries: vec![(i, j, [0.0, -h])] });
            }
        }
    }
    out
}

/// Coordinates ⟨F_k, X⟩ of a Hermitian matrix in [`hermitian_basis`] order.
pub fn hermitian_coordinates(x: &CMat) -> Vec<f64> {
    hermitian_basis(x.nrows()).iter().map(|f| f.inner(x)).collect()
}

/// Σ_k c_k F_k.
pub fn from_hermitian_coordinates(n: usize, c: &[f64]) -> CMat {
    let mut m = CMat::zeros(n, n);
    for (f, &ck) in hermitian_basis(n).iter().zip(c) {
        for &(i, j, [re, im]) in &f.entries {
            let z = Complex64::new(re * ck, im * ck);
            m[(i, j)] += z;
            if i != j {
                m[(j, i)] += z.conj();
            }
        }
    }
    m
}

/// Conic program over Hermitian PSD blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub sense: Sense,
    pub blocks: Vec<Block>,
    pub objective: Vec<Term>,
    #[serde(default)]
    pub offset: f64,
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub groups: Vec<MatrixGroup>,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        SdpProblem { sense, blocks: Vec::new(), objective: Vec::new(), offset: 0.0, constraints: Vec::new(), groups: Vec::new() }
    }

    pub fn add_block(&mut self, name: impl Into<String>, dim: usize) -> BlockId {
        self.blocks.push(Block { name: name.into(), dim });
        BlockId(self.blocks.len() - 1)
    }

    pub fn block_dim(&self, b: BlockId) -> usize {
        self.blocks[b.0].dim
    }

    pub fn add_objective(&mut self, block: BlockId, coeff: SparseHermitian) {
        self.objective.push(Term { block, coeff });
    }

    /// Scalar constraint; returns its row index.
    pub fn add_constraint(&mut self, terms: Vec<(BlockId, SparseHermitian)>, relation: Relation, rhs: f64) -> usize {
        let terms = terms.into_iter().map(|(block, coeff)| Term { block, coeff }).collect();
        self.constraints.push(Constraint { terms, relation, rhs });
        self.constraints.len() - 1
    }

    /// Matrix constraint Σ s_j L_j(X_j) (relation) rhs. Inequalities receive a PSD slack block
    /// named `<name>.slack`. Rows follow the [`hermitian_basis`] order.
    pub fn add_matrix_constraint(
        &mut self,
        name: &str,
        terms: Vec<(BlockId, f64, LinearMap)>,
        relation: Relation,
        rhs: &CMat,
    ) -> Result<GroupId> {
        let n = rhs.nrows();
        let mut terms = terms;
        match relation {
            Relation::Eq => {}
            Relation::Ge | Relation::Le => {
                let s = self.add_block(format!("{name}.slack"), n);
                let sign = if relation == Relation::Ge { -1.0 } else { 1.0 };
                terms.push((s, sign, LinearMap::Identity));
            }
        }
        let basis = hermitian_basis(n);
        let mut per_term = Vec::with_capacity(terms.len());
        for (block, scale, map) in &terms {
            let bd = self.blocks.get(block.0).ok_or_else(|| Error::invalid(format!("unknown block {}", block.0)))?.dim;
            let (din, dout) = map.dims(bd)?;
            if din != bd || dout != n {
                return Err(Error::Dimension(format!(
                    "term on block `{}` maps {din}→{dout}, expected {bd}→{n}",
                    self.blocks[block.0].name
                )));
            }
            per_term.push((*block, map.adjoint_basis(&basis, bd)?, *scale));
        }
        let first_row = self.constraints.len();
        for (k, f) in basis.iter().enumerate() {
            let mut row_terms = Vec::new();
            for (block, adj, scale) in &per_term {
                if !adj[k].entries.is_empty() {
                    row_terms.push(Term { block: *block, coeff: adj[k].scaled(*scale) });
                }
            }
            let rhs_k = f.inner(rhs);
            self.constraints.push(Constraint { terms: row_terms, relation: Relation::Eq, rhs: rhs_k });
        }
        self.groups.push(MatrixGroup { name: name.to_string(), dim: n, first_row });
        Ok(GroupId(self.groups.len() - 1))
    }

    pub fn group(&self, g: GroupId) -> &MatrixGroup {
        &self.groups[g.0]
    }

    /// Block created as the slack of a matrix inequality, if any.
    pub fn find_block(&self, name: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.name == name).map(BlockId)
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.blocks {
            if b.dim == 0 {
                return Err(Error::Dimension(format!("block `{}` has dimension 0", b.name)));
            }
        }
        let check = |t: &Term| -> Result<()> {
            let b = self.blocks.get(t.block.0).ok_or_else(|| Error::invalid(format!("unknown block {}", t.block.0)))?;
            if t.coeff.dim != b.dim {
                return Err(Error::Dimension(format!("coefficient of dimension {} on block `{}` of dimension {}", t.coeff.dim, b.name, b.dim)));
            }
            t.coeff.validate()
        };
        for t in &self.objective {
            check(t)?;
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::invalid("non-finite right-hand side"));
            }
            for t in &c.terms {
                check(t)?;
            }
        }
        for g in &self.groups {
            if g.first_row + g.dim * g.dim > self.constraints.len() {
                return Err(Error::invalid(format!("matrix group `{}` exceeds the constraint list", g.name)));
            }
        }
        Ok(())
    }

    /// ⟨C, X⟩ + offset.
    pub fn objective_value(&self, x: &[CMat]) -> f64 {
        self.offset + self.objective.iter().map(|t| t.coeff.inner(&x[t.block.0])).sum::<f64>()
    }

    /// Dual slack at multipliers `y`: C − Σ y_i A_i (minimize) or Σ y_i A_i − C (maximize),
    /// one matrix per block; scalar-inequality slacks reported separately.
    pub fn dual_slack_at(&self, y: &[f64]) -> Result<(Vec<CMat>, Vec<f64>)> {
        if y.len() != self.constraints.len() {
            return Err(Error::Dimension(format!("{} multipliers for {} constraints", y.len(), self.constraints.len())));
        }
        let mut s: Vec<CMat> = self.blocks.iter().map(|b| CMat::zeros(b.dim, b.dim)).collect();
        let sgn = if self.sense == Sense::Minimize { 1.0 } else { -1.0 };
        for t in &self.objective {
            s[t.block.0] += t.coeff.to_dense() * Complex64::new(sgn, 0.0);
        }
        let mut scalars = Vec::new();
        for (c, &yi) in self.constraints.iter().zip(y) {
            for t in &c.terms {
                s[t.block.0] -= t.coeff.to_dense() * Complex64::new(sgn * yi, 0.0);
            }
            // scalar slack s ≥ 0 enters with +1 for ≤ and −1 for ≥
            match c.relation {
                Relation::Eq => {}
                Relation::Le => scalars.push(-sgn * yi),
                Relation::Ge => scalars.push(sgn * yi),
            }
        }
        Ok((s, scalars))
    }

    /// Multiplier vector placing the Hermitian matrix `y` on a matrix group.
    pub fn group_multipliers(&self, g: GroupId, y: &CMat, out: &mut [f64]) {
        let grp = &self.groups[g.0];
        for (k, c) in hermitian_coordinates(y).into_iter().enumerate() {
            out[grp.first_row + k] = c;
        }
    }

    /// Strict dual feasibility margin at `y`: smallest eigenvalue over all dual slack blocks
    /// and scalar-inequality slacks.
    pub fn dual_margin_at(&self, y: &[f64]) -> Result<f64> {
        let (s, scalars) = self.dual_slack_at(y)?;
        let mut m = f64::INFINITY;
        for b in &s {
            m = m.min(*crate::operator::Spectrum::of(b).values.last().unwrap_or(&f64::INFINITY));
        }
        for v in scalars {
            m = m.min(v);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: SdpProblem = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random::random_hermitian;

    #[test]
    fn basis_is_orthonormal_and_complete() {
        let n = 3;
        let b = hermitian_basis(n);
        assert_eq!(b.len(), n * n);
        for (k, f) in b.iter().enumerate() {
            let fd = f.to_dense();
            for (l, g) in b.iter().enumerate() {
                let ip = g.inner(&fd);
                assert!((ip - if k == l { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let l = SystemLayout::new([("A", 3)]).unwrap();
        let x = random_hermitian(&l, 4);
        let back = from_hermitian_coordinates(3, &hermitian_coordinates(x.matrix()));
        assert!((back - x.matrix()).camax() < 1e-13);
    }

    #[test]
    fn adjoints_match_forward_maps() {
        let ab = SystemLayout::new([("A", 2), ("B", 3)]).unwrap();
        let b = SystemLayout::new([("B", 3)]).unwrap();
        let x_b = random_hermitian(&b, 1);
        let y_ab = random_hermitian(&ab, 2);
        // ⟨F_k, X⊗1⟩ = ⟨adj F_k, X⟩
        let embed = LinearMap::Embed { sub: b.clone(), full: ab.clone() };
        let basis = hermitian_basis(6);
        let adj = embed.adjoint_basis(&basis, 3).unwrap();
        let fwd = x_b.embed(&ab).unwrap();
        for (f, a) in basis.iter().zip(&adj) {
            assert!((f.inner(fwd.matrix()) - a.inner(x_b.matrix())).abs() < 1e-12);
        }
        let pt = LinearMap::PartialTrace { full: ab.clone(), keep: vec!["B".into()] };
        let basis3 = hermitian_basis(3);
        let adj = pt.adjoint_basis(&basis3, 6).unwrap();
        let fwd = y_ab.partial_trace(&["B"]).unwrap();
        for (f, a) in basis3.iter().zip(&adj) {
            assert!((f.inner(fwd.matrix()) - a.inner(y_ab.matrix())).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_objective(x, SparseHermitian::identity(2));
        p.add_constraint(vec![(x, SparseHermitian::identity(2))], Relation::Eq, 1.0);
        let text = p.to_json().unwrap();
        assert_eq!(SdpProblem::from_json(&text).unwrap(), p);
    }

    #[test]
    fn validation_catches_bad_coefficients() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_constraint(vec![(x, SparseHermitian::identity(3))], Relation::Eq, 1.0);
        assert!(p.validate().is_err());
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block("X", 2);
        p.add_constraint(vec![(x, SparseHermitian { dim: 2, entries: vec![(0, 0, [1.0, 0.5])] })], Relation::Eq, 1.0);
        assert!(matches!(p.validate(), Err(Error::NotHermitian(_))));
    }
}
