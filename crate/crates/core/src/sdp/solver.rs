//! Infeasible-start primal-dual interior-point method (Mehrotra predictor-corrector with
//! Nesterov–Todd scaling) on the real symmetric embedding of a Hermitian program.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::problem::{BlockId, GroupId, Relation, SdpProblem, Sense, SparseHermitian};
use super::problem::from_hermitian_coordinates;
use crate::error::{Error, Result};
use crate::operator::{checked_eigen, checked_eigenvalues};
use crate::operator::{complexify_matrix, CMat, Spectrum};

type RMat = DMatrix<f64>;
type Entries = Vec<(usize, usize, f64)>;
/// Full (both triangles) complex entries of a coefficient on a realified block.
type CEntries = Vec<(usize, usize, Complex64)>;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative primal/dual infeasibility and relative gap at termination.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the step to the boundary.
    pub step_fraction: f64,
    /// Iterate norm flagged as divergence.
    pub divergence: f64,
    pub keep_log: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 200, step_fraction: 0.98, divergence: 1e12, keep_log: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max-iterations",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One interior-point iterate, objectives in the caller's sense.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterateLog {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// ⟨X, S⟩ summed over blocks.
    pub complementarity: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub sense: Sense,
    /// Primal matrix per block.
    #[serde(with = "crate::operator::io::cmat_list")]
    pub primal: Vec<CMat>,
    /// Multiplier per constraint row.
    pub dual: Vec<f64>,
    /// Dual slack per block (PSD at a dual-feasible point).
    #[serde(with = "crate::operator::io::cmat_list")]
    pub slack: Vec<CMat>,
    /// Primal value of the implicit slack of each scalar inequality, in row order.
    pub scalar_slack: Vec<f64>,
    /// Dual slack of each scalar inequality.
    pub scalar_dual_slack: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// primal − dual for minimization, dual − primal for maximization.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub log: Vec<IterateLog>,
}

impl SdpSolution {
    pub fn block(&self, b: BlockId) -> &CMat {
        &self.primal[b.0]
    }

    pub fn slack_block(&self, b: BlockId) -> &CMat {
        &self.slack[b.0]
    }

    /// Σ_k y_k F_k over a matrix group: the Hermitian multiplier of that constraint.
    pub fn dual_matrix(&self, problem: &SdpProblem, g: GroupId) -> CMat {
        let grp = problem.group(g);
        from_hermitian_coordinates(grp.dim, &self.dual[grp.first_row..grp.first_row + grp.dim * grp.dim])
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Converts any non-optimal status into [`Error::Solver`].
    pub fn require_optimal(self, what: &str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status.to_string(),
                message: format!(
                    "{what}: stopped after {} iterations (primal {:.6e}, dual {:.6e}, residuals {:.2e}/{:.2e})",
                    self.iterations, self.primal_objective, self.dual_objective, self.primal_residual, self.dual_residual
                ),
            })
        }
    }

    /// Midpoint of the primal and dual objectives.
    pub fn value(&self) -> f64 {
        0.5 * (self.primal_objective + self.dual_objective)
    }

    /// log₂ of [`SdpSolution::value`], −∞ for non-positive values.
    pub fn log2_value(&self) -> f64 {
        let v = self.value();
        if v > 0.0 { v.log2() } else { f64::NEG_INFINITY }
    }
}

struct RealSdp {
    dims: Vec<usize>,
    c: Vec<RMat>,
    /// Per row: (real block, full symmetric entry list).
    rows: Vec<Vec<(usize, Entries)>>,
    /// Complex form of each row term on a realified block, aligned with `rows`.
    crows: Vec<Vec<Option<CEntries>>>,
    b: DVector<f64>,
    /// Real block index and whether it is a realified complex block, per user block.
    user: Vec<(usize, bool)>,
    /// Real block of each scalar-inequality slack.
    scalar: Vec<usize>,
}

fn complex_entries(coeff: &SparseHermitian, out: &mut CEntries) {
    for &(i, j, [re, im]) in &coeff.entries {
        out.push((i, j, Complex64::new(re, im)));
        if i != j {
            out.push((j, i, Complex64::new(re, -im)));
        }
    }
}

fn realify_entries(coeff: &SparseHermitian, complex: bool, out: &mut Entries) {
    let n = coeff.dim;
    for &(i, j, [re, im]) in &coeff.entries {
        if !complex {
            out.push((0, 0, re));
            continue;
        }
        let (a, b) = (0.5 * re, 0.5 * im);
        if i == j {
            out.push((i, i, a));
            out.push((i + n, i + n, a));
        } else {
            out.extend_from_slice(&[
                (i, j, a),
                (j, i, a),
                (i + n, j + n, a),
                (j + n, i + n, a),
                (i, j + n, -b),
                (j + n, i, -b),
                (j, i + n, b),
                (i + n, j, b),
            ]);
        }
    }
}

impl RealSdp {
    fn new(p: &SdpProblem) -> Self {
        let mut dims = Vec::new();
        let mut user = Vec::new();
        for b in &p.blocks {
            let complex = b.dim > 1;
            user.push((dims.len(), complex));
            dims.push(if complex { 2 * b.dim } else { 1 });
        }
        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut scalar = Vec::new();
        let mut rows = Vec::with_capacity(p.constraints.len());
        let mut crows = Vec::with_capacity(p.constraints.len());
        let mut b = DVector::zeros(p.constraints.len());
        for (i, con) in p.constraints.iter().enumerate() {
            let mut per: BTreeMap<usize, (Entries, CEntries)> = BTreeMap::new();
            for t in &con.terms {
                let (rb, complex) = user[t.block.0];
                let slot = per.entry(rb).or_default();
                realify_entries(&t.coeff, complex, &mut slot.0);
                if complex {
                    complex_entries(&t.coeff, &mut slot.1);
                }
            }
            let per: Vec<(usize, (Entries, CEntries))> = per.into_iter().filter(|(_, e)| !e.0.is_empty()).collect();
            let mut crow: Vec<Option<CEntries>> =
                per.iter().map(|(rb, (_, ce))| if dims[*rb] > 1 { Some(ce.clone()) } else { None }).collect();
            let mut row: Vec<(usize, Entries)> = per.into_iter().map(|(rb, (e, _))| (rb, e)).collect();
            if con.relation != Relation::Eq {
                let s = dims.len();
                dims.push(1);
                scalar.push(s);
                row.push((s, vec![(0, 0, if con.relation == Relation::Le { 1.0 } else { -1.0 })]));
                crow.push(None);
            }
            rows.push(row);
            crows.push(crow);
            b[i] = con.rhs;
        }
        let mut c: Vec<RMat> = dims.iter().map(|&n| RMat::zeros(n, n)).collect();
        for t in &p.objective {
            let (rb, complex) = user[t.block.0];
            let mut e = Vec::new();
            realify_entries(&t.coeff, complex, &mut e);
            for (r, col, v) in e {
                c[rb][(r, col)] += sign * v;
            }
        }
        RealSdp { dims, c, rows, crows, b, user, scalar }
    }

    fn amap(&self, x: &[RMat]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| {
                row.iter().map(|(blk, e)| e.iter().map(|&(r, c, v)| v * x[*blk][(r, c)]).sum::<f64>()).sum::<f64>()
            }),
        )
    }

    fn amap_adj(&self, y: &DVector<f64>) -> Vec<RMat> {
        let mut out: Vec<RMat> = self.dims.iter().map(|&n| RMat::zeros(n, n)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for (blk, e) in row {
                let m = &mut out[*blk];
                for &(r, c, v) in e {
                    m[(r, c)] += yi * v;
                }
            }
        }
        out
    }

    /// Rows touching each block, as (row, index into that row's block list).
    fn block_rows(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.dims.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for (k, (blk, _)) in row.iter().enumerate() {
                out[*blk].push((i, k));
            }
        }
        out
    }
}

/// Nesterov–Todd scaling of one block: X = G D Gᵀ, S = G⁻ᵀ D G⁻¹.
struct Scaling {
    g: RMat,
    w: RMat,
    d: Vec<f64>,
}

fn nt_scaling(x: &RMat, s: &RMat) -> Option<Scaling> {
    let l = Cholesky::new(s.clone())?.l();
    let mx = l.transpose() * x * &l;
    let eig = checked_eigen(&symmetrize_r(&mx));
    let lam: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(1e-300)).collect();
    let mut ql = eig.eigenvectors.clone();
    for (j, &lj) in lam.iter().enumerate() {
        ql.column_mut(j).scale_mut(lj.powf(0.25));
    }
    let g = l.transpose().solve_upper_triangular(&ql)?;
    let w = &g * g.transpose();
    Some(Scaling { g, w, d: lam.iter().map(|v| v.sqrt()).collect() })
}

/// Nearest matrix of the form [[R, −I], [I, R]] (symmetric), the image of a Hermitian R + iI.
fn project_embedding(m: &mut RMat) {
    let h = m.nrows() / 2;
    let o = m.clone();
    for i in 0..h {
        for j in 0..h {
            let re = 0.25 * (o[(i, j)] + o[(j, i)] + o[(i + h, j + h)] + o[(j + h, i + h)]);
            let im = 0.25 * (o[(i + h, j)] - o[(j + h, i)] - o[(i, j + h)] + o[(j, i + h)]);
            m[(i, j)] = re;
            m[(i + h, j + h)] = re;
            m[(i + h, j)] = im;
            m[(i, j + h)] = -im;
        }
    }
}

/// NT scaling of a realified complex block computed in the complex form, so that W and G
/// are exact embeddings.
fn nt_scaling_complex(x: &RMat, s: &RMat) -> Option<Scaling> {
    let (xc, sc) = (complexify_matrix(x), complexify_matrix(s));
    let l = Cholesky::new(sc)?.l();
    let mx = l.adjoint() * xc * &l;
    let mx = (&mx + mx.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = checked_eigen(&mx);
    let lam: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(1e-300)).collect();
    let mut ql = eig.eigenvectors.clone();
    for (j, &lj) in lam.iter().enumerate() {
        ql.column_mut(j).scale_mut(lj.powf(0.25));
    }
    let g = l.adjoint().solve_upper_triangular(&ql)?;
    let w = &g * g.adjoint();
    let d: Vec<f64> = lam.iter().map(|v| v.sqrt()).collect();
    Some(Scaling { g: embed_general(&g), w: embed_general(&w), d: d.iter().chain(&d).copied().collect() })
}

/// [[Re M, −Im M], [Im M, Re M]] for a general complex M.
fn embed_general(m: &CMat) -> RMat {
    let (r, c) = m.shape();
    RMat::from_fn(2 * r, 2 * c, |i, j| {
        let v = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}

fn symmetrize_r(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

fn frob(ms: &[RMat]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn inner_r(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest α with D + αΔ ⪰ 0 (∞ if unbounded).
fn max_step(d: &[f64], delta: &RMat) -> f64 {
    let n = d.len();
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let m = RMat::from_fn(n, n, |i, j| 0.5 * (delta[(i, j)] + delta[(j, i)]) * s[i] * s[j]);
    let lmin = if n == 1 { m[(0, 0)] } else { checked_eigenvalues(&m).min() };
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

struct Direction {
    dx: Vec<RMat>,
    dy: DVector<f64>,
    ds: Vec<RMat>,
    dxt: Vec<RMat>,
    dst: Vec<RMat>,
}

struct Iterate {
    x: Vec<RMat>,
    y: DVector<f64>,
    s: Vec<RMat>,
}

/// Schur complement M_kl = ⟨A_k, W A_l W⟩.
fn schur(p: &RealSdp, block_rows: &[Vec<(usize, usize)>], sc: &[Scaling]) -> RMat {
    let m = p.rows.len();
    let mut out = RMat::zeros(m, m);
    for (blk, rows) in block_rows.iter().enumerate() {
        let n = p.dims[blk];
        let w = &sc[blk].w;
        let ws = w.as_slice();
        let dense_cut = 4 * n;
        let wc = p.user.iter().any(|&(rb, c)| c && rb == blk).then(|| {
            let h = n / 2;
            CMat::from_fn(h, h, |i, j| Complex64::new(w[(i, j)], w[(i + h, j)]))
        });
        // W A_l W for rows with many entries
        let dense: Vec<Option<RMat>> = rows
            .iter()
            .enumerate()
                        .map(|(_, &(ri, k))| {
                if p.rows[ri][k].1.len() <= dense_cut {
                    return None;
                }
                let mut aw = RMat::zeros(n, n);
                for &(a, b, v) in &p.rows[ri][k].1 {
                    for c in 0..n {
                        aw[(a, c)] += v * w[(b, c)];
                    }
                }
                Some(w * aw)
            })
            .collect();
        for (pi, &(rk, kk)) in rows.iter().enumerate() {
            let ek = &p.rows[rk][kk].1;
            for (qi, &(rl, kl)) in rows.iter().enumerate().skip(pi) {
                let el = &p.rows[rl][kl].1;
                let val = if let Some(g) = &dense[qi] {
                    ek.iter().map(|&(a, b, u)| u * g[(b, a)]).sum::<f64>()
                } else if let Some(g) = &dense[pi] {
                    el.iter().map(|&(c, d, v)| v * g[(d, c)]).sum::<f64>()
                } else if let (Some(ck), Some(cl)) = (&p.crows[rk][kk], &p.crows[rl][kl]) {
                    // ⟨R(A)/2, R(W) R(B)/2 R(W)⟩ = ½ Re tr(A W B W) with W the complex form
                    let wc = wc.as_ref().expect("complex scaling");
                    let mut s = Complex64::new(0.0, 0.0);
                    for &(a, b, u) in ck {
                        let mut t = Complex64::new(0.0, 0.0);
                        for &(c, d, v) in cl {
                            t += v * wc[(b, c)] * wc[(d, a)];
                        }
                        s += u * t;
                    }
                    0.5 * s.re
                } else {
                    let mut s = 0.0;
                    for &(a, b, u) in ek {
                        let mut t = 0.0;
                        for &(c, d, v) in el {
                            t += v * ws[c * n + b] * ws[a * n + d];
                        }
                        s += u * t;
                    }
                    s
                };
                out[(rk, rl)] += val;
                if rk != rl {
                    out[(rl, rk)] += val;
                }
            }
        }
    }
    out
}

fn factor(m: RMat) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let mut delta = 1e-14 * scale;
    for _ in 0..8 {
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += delta;
        }
        if let Some(c) = Cholesky::new(reg) {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn direction(
    p: &RealSdp,
    sc: &[Scaling],
    chol: &Cholesky<f64, nalgebra::Dyn>,
    rp: &DVector<f64>,
    rd: &[RMat],
    a_wrdw: &DVector<f64>,
    rc: &[RMat],
) -> Direction {
    let t: Vec<RMat> = sc
        .iter()
        .zip(rc)
        .map(|(s, r)| {
            let n = s.d.len();
            RMat::from_fn(n, n, |i, j| 2.0 * r[(i, j)] / (s.d[i] + s.d[j]))
        })
        .collect();
    let gtg: Vec<RMat> = sc.iter().zip(&t).map(|(s, ti)| &s.g * ti * s.g.transpose()).collect();
    let h = rp - p.amap(&gtg) + a_wrdw;
    let mut dy = chol.solve(&h);
    // iterative refinement against the matrix-free Schur operator y ↦ A(W Aᵀ(y) W)
    for _ in 0..3 {
        let aty = p.amap_adj(&dy);
        let waw: Vec<RMat> = sc.iter().zip(&aty).map(|(s, a)| &s.w * a * &s.w).collect();
        let r = &h - p.amap(&waw);
        if r.norm() <= 1e-15 * (1.0 + h.norm()) {
            break;
        }
        dy += chol.solve(&r);
    }
    let aty = p.amap_adj(&dy);
    let ds: Vec<RMat> = rd.iter().zip(&aty).map(|(r, a)| symmetrize_r(&(r - a))).collect();
    let dst: Vec<RMat> = sc.iter().zip(&ds).map(|(s, d)| symmetrize_r(&(s.g.transpose() * d * &s.g))).collect();
    let dxt: Vec<RMat> = t.iter().zip(&dst).map(|(ti, d)| symmetrize_r(&(ti - d))).collect();
    let dx: Vec<RMat> = sc.iter().zip(&dxt).map(|(s, d)| symmetrize_r(&(&s.g * d * s.g.transpose()))).collect();
    Direction { dx, dy, ds, dxt, dst }
}

fn steps(sc: &[Scaling], dir: &Direction) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for (s, (dx, ds)) in sc.iter().zip(dir.dxt.iter().zip(&dir.dst)) {
        ap = ap.min(max_step(&s.d, dx));
        ad = ad.min(max_step(&s.d, ds));
    }
    (ap, ad)
}

struct Measures {
    rp: DVector<f64>,
    rd: Vec<RMat>,
    pobj: f64,
    dobj: f64,
    xs: f64,
    relp: f64,
    reld: f64,
    relgap: f64,
}

fn measures(p: &RealSdp, it: &Iterate, nb: f64, nc: f64) -> Measures {
    let rp = &p.b - p.amap(&it.x);
    let aty = p.amap_adj(&it.y);
    let rd: Vec<RMat> = p.c.iter().zip(&it.s).zip(&aty).map(|((c, s), a)| c - s - a).collect();
    let pobj: f64 = p.c.iter().zip(&it.x).map(|(c, x)| inner_r(c, x)).sum();
    let dobj = p.b.dot(&it.y);
    let xs: f64 = it.x.iter().zip(&it.s).map(|(x, s)| inner_r(x, s)).sum();
    let denom = 1.0 + pobj.abs() + dobj.abs();
    Measures {
        relp: rp.norm() / (1.0 + nb),
        reld: frob(&rd) / (1.0 + nc),
        relgap: (pobj - dobj).abs().max(xs.abs()) / denom,
        rp,
        rd,
        pobj,
        dobj,
        xs,
    }
}

fn initial_point(p: &RealSdp) -> Iterate {
    let mut x = Vec::new();
    let mut s = Vec::new();
    let mut xi = vec![10.0f64; p.dims.len()];
    let mut eta = vec![10.0f64; p.dims.len()];
    for (j, &n) in p.dims.iter().enumerate() {
        let r = (n as f64).sqrt();
        xi[j] = xi[j].max(r);
        eta[j] = eta[j].max(r).max(p.c[j].norm());
    }
    for (i, row) in p.rows.iter().enumerate() {
        for (blk, e) in row {
            let na = e.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt();
            let n = p.dims[*blk] as f64;
            xi[*blk] = xi[*blk].max(n * (1.0 + p.b[i].abs()) / (1.0 + na));
            eta[*blk] = eta[*blk].max(na);
        }
    }
    for (j, &n) in p.dims.iter().enumerate() {
        x.push(RMat::identity(n, n) * xi[j]);
        s.push(RMat::identity(n, n) * eta[j]);
    }
    Iterate { x, y: DVector::zeros(p.rows.len()), s }
}

/// Solves the program; `Err` only for malformed input. Non-optimal termination is reported
/// through [`SdpSolution::status`].
pub fn solve(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let p = RealSdp::new(problem);
    let block_rows = p.block_rows();
    let mut complex_block = vec![false; p.dims.len()];
    for &(rb, c) in &p.user {
        complex_block[rb] = c;
    }
    let nb = p.b.norm();
    let nc = frob(&p.c);
    let ntot: f64 = p.dims.iter().sum::<usize>() as f64;
    let mut it = initial_point(&p);
    let mut log = Vec::new();
    let mut best: Option<(f64, Iterate)> = None;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut stalls = 0;
    let user_sign = if problem.sense == Sense::Maximize { -1.0 } else { 1.0 };

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ms = measures(&p, &it, nb, nc);
        let score = ms.relp.max(ms.reld).max(ms.relgap);
        if best.as_ref().map(|(b, _)| score < *b).unwrap_or(true) {
            best = Some((score, Iterate { x: it.x.clone(), y: it.y.clone(), s: it.s.clone() }));
        }
        if score <= opts.tol {
            status = SolveStatus::Optimal;
            break;
        }
        let xnorm = frob(&it.x);
        let ynorm = it.y.norm().max(frob(&it.s));
        if xnorm > opts.divergence {
            status = SolveStatus::Unbounded;
            break;
        }
        if ynorm > opts.divergence {
            status = SolveStatus::Infeasible;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        let Some(sc) = it
            .x
            .iter()
            .zip(&it.s)
            .zip(&complex_block)
            .map(|((x, s), &c)| if c { nt_scaling_complex(x, s) } else { nt_scaling(x, s) })
            .collect::<Option<Vec<_>>>()
        else {
            break;
        };
        let Some(chol) = factor(schur(&p, &block_rows, &sc)) else {
            break;
        };
        let wrdw: Vec<RMat> = sc.iter().zip(&ms.rd).map(|(s, r)| &s.w * r * &s.w).collect();
        let a_wrdw = p.amap(&wrdw);
        let mu = ms.xs / ntot;

        // predictor
        let rc_aff: Vec<RMat> = sc.iter().map(|s| RMat::from_diagonal(&DVector::from_iterator(s.d.len(), s.d.iter().map(|v| -v * v)))).collect();
        let aff = direction(&p, &sc, &chol, &ms.rp, &ms.rd, &a_wrdw, &rc_aff);
        let (apm, adm) = steps(&sc, &aff);
        let (ap, ad) = (apm.min(1.0), adm.min(1.0));
        let mut mu_aff = 0.0;
        for (s, (dx, ds)) in sc.iter().zip(aff.dxt.iter().zip(&aff.dst)) {
            let n = s.d.len();
            for i in 0..n {
                for j in 0..n {
                    let xv = if i == j { s.d[i] } else { 0.0 } + ap * dx[(i, j)];
                    let sv = if i == j { s.d[i] } else { 0.0 } + ad * ds[(i, j)];
                    mu_aff += xv * sv;
                }
            }
        }
        mu_aff /= ntot;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // corrector
        let rc: Vec<RMat> = sc
            .iter()
            .zip(aff.dxt.iter().zip(&aff.dst))
            .map(|(s, (dx, ds))| {
                let n = s.d.len();
                let mut r = -(dx * ds + ds * dx) * 0.5;
                for i in 0..n {
                    r[(i, i)] += sigma * mu - s.d[i] * s.d[i];
                }
                r
            })
            .collect();
        let dir = direction(&p, &sc, &chol, &ms.rp, &ms.rd, &a_wrdw, &rc);
        let (apm, adm) = steps(&sc, &dir);
        let ap = (opts.step_fraction * apm).min(1.0);
        let ad = (opts.step_fraction * adm).min(1.0);
        for (x, dx) in it.x.iter_mut().zip(&dir.dx) {
            *x += dx * ap;
        }
        for (s, ds) in it.s.iter_mut().zip(&dir.ds) {
            *s += ds * ad;
        }
        it.y += &dir.dy * ad;
        for &(rb, complex) in &p.user {
            if complex {
                project_embedding(&mut it.x[rb]);
                project_embedding(&mut it.s[rb]);
            }
        }

        if opts.keep_log {
            log.push(IterateLog {
                iteration: iter,
                primal_objective: user_sign * ms.pobj + problem.offset,
                dual_objective: user_sign * ms.dobj + problem.offset,
                primal_residual: ms.rp.norm(),
                dual_residual: frob(&ms.rd),
                complementarity: ms.xs,
                step_primal: ap,
                step_dual: ad,
            });
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let (best_score, fin) = best.expect("at least one iterate");
    if status == SolveStatus::MaxIterations && best_score <= 10.0 * opts.tol {
        status = SolveStatus::Optimal;
    }
    let fin = if status == SolveStatus::Optimal || status == SolveStatus::MaxIterations { fin } else { it };
    let ms = measures(&p, &fin, nb, nc);
    if opts.keep_log {
        log.push(IterateLog {
            iteration: iterations,
            primal_objective: user_sign * ms.pobj + problem.offset,
            dual_objective: user_sign * ms.dobj + problem.offset,
            primal_residual: ms.rp.norm(),
            dual_residual: frob(&ms.rd),
            complementarity: ms.xs,
            step_primal: 0.0,
            step_dual: 0.0,
        });
    }

    let cplx = |m: &RMat, complex: bool, factor: f64| -> CMat {
        if complex {
            complexify_matrix(m) * Complex64::new(factor, 0.0)
        } else {
            CMat::from_element(1, 1, Complex64::new(m[(0, 0)], 0.0))
        }
    };
    let primal = p.user.iter().map(|&(rb, c)| cplx(&fin.x[rb], c, 1.0)).collect();
    let slack = p.user.iter().map(|&(rb, c)| cplx(&fin.s[rb], c, 2.0)).collect();
    let pobj = user_sign * ms.pobj + problem.offset;
    let dobj = user_sign * ms.dobj + problem.offset;
    Ok(SdpSolution {
        status,
        sense: problem.sense,
        primal,
        dual: fin.y.iter().map(|v| user_sign * v).collect(),
        slack,
        scalar_slack: p.scalar.iter().map(|&b| fin.x[b][(0, 0)]).collect(),
        scalar_dual_slack: p.scalar.iter().map(|&b| fin.s[b][(0, 0)]).collect(),
        primal_objective: pobj,
        dual_objective: dobj,
        gap: user_sign * (pobj - dobj),
        primal_residual: ms.rp.norm(),
        dual_residual: frob(&ms.rd),
        iterations,
        log,
    })
}

fn min_eig(m: &CMat) -> f64 {
    Spectrum::of(m).values.last().copied().unwrap_or(0.0)
}

/// Weak duality of a solution: dual ≤ primal + 1e-9 for minimization, mirrored for
/// maximization. Missing or invalid certificates (indefinite primal or slack) are errors.
pub fn check_weak_duality(sol: &SdpSolution) -> Result<bool> {
    if sol.primal.is_empty() || sol.primal.len() != sol.slack.len() {
        return Err(Error::invalid("solution lacks primal or dual certificates"));
    }
    let tol = 1e-7;
    for (k, (x, s)) in sol.primal.iter().zip(&sol.slack).enumerate() {
        let scale = 1.0 + x.camax().max(s.camax());
        if min_eig(x) < -tol * scale {
            return Err(Error::invalid(format!("primal block {k} is not positive semidefinite")));
        }
        if min_eig(s) < -tol * scale {
            return Err(Error::invalid(format!("dual slack of block {k} is not positive semidefinite")));
        }
    }
    if sol.scalar_slack.iter().chain(&sol.scalar_dual_slack).any(|&v| v < -tol) {
        return Err(Error::invalid("negative scalar slack"));
    }
    Ok(match sol.sense {
        Sense::Minimize => sol.dual_objective <= sol.primal_objective + 1e-9,
        Sense::Maximize => sol.dual_objective >= sol.primal_objective - 1e-9,
    })
}
