//! Finite-difference realization of the coupled operator, used to check the
//! multiplicity formulas independently of any Weyl-function machinery.
//!
//! Each edge carries the interior nodes `x_j = j·h`, `j = 1, …, N − 1`. The
//! vertex values `u_l(0)` are not unknowns: the discretized interface
//! condition `A·u(0) + B·u'(0) = 0` with
//! `u'_l(0) ≈ (−3u_{l,0} + 4u_{l,1} − u_{l,2})/(2h_l)` is solved for them,
//! giving `u(0) = G·w`, `w_l = 4u_{l,1} − u_{l,2}`. Likewise the outer node
//! is eliminated through the outer boundary condition. What remains is a
//! tridiagonal matrix `T` plus the rank-`n` term `U·G·W` that feeds the vertex
//! values into the first row of each edge.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interface::{coupling_codim, random::gaussian_matrix, InterfaceCondition};
use crate::numeric::{c64, invert, singular_values, svd, CMatrix, RankTolerance};
use crate::weyl::{EdgeSpec, Potential, StarGraph};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub points_per_edge: usize,
    /// Half-lines are cut at this length with a Dirichlet condition.
    pub truncation: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_edge: 2000,
            truncation: 40.0,
        }
    }
}

impl GridSpec {
    pub fn new(points_per_edge: usize, truncation: f64) -> Result<Self> {
        if points_per_edge < 16 {
            return Err(Error::input(format!(
                "need at least 16 points per edge, got {points_per_edge}"
            )));
        }
        if !(truncation.is_finite() && truncation > 0.0) {
            return Err(Error::input("truncation length must be positive"));
        }
        Ok(GridSpec {
            points_per_edge,
            truncation,
        })
    }
}

/// The reduced finite-difference operator `R = T + U·G·W`.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    n: usize,
    offsets: Vec<usize>,
    h: Vec<f64>,
    /// `lower[i]` couples row `i` to `i − 1`; zero at the start of each edge.
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    /// `upper[i]` couples row `i` to `i + 1`; zero at the end of each edge.
    upper: Vec<Complex64>,
    /// Vertex map `u(0) = G·w`.
    g: CMatrix,
    /// Discretized interface equations: coefficients of `u(0)` and of `w`.
    vertex_rows: (CMatrix, CMatrix),
}

fn edge_geometry<'a>(edge: &'a EdgeSpec, grid: &GridSpec) -> Result<(f64, &'a Potential, f64)> {
    match edge {
        EdgeSpec::Regular {
            length,
            potential,
            beta,
        } => Ok((*length, potential, *beta)),
        EdgeSpec::HalfLine { potential } => {
            if potential.support_end() > grid.truncation {
                return Err(Error::input(
                    "potential extends beyond the truncation length",
                ));
            }
            Ok((grid.truncation, potential, 0.0))
        }
        EdgeSpec::Artificial { .. } => Err(Error::Unsupported(
            "the finite-difference model has no artificial edges".into(),
        )),
    }
}

/// Build `R` for the graph, interface condition and grid.
pub fn assemble(
    graph: &StarGraph,
    ic: &InterfaceCondition,
    grid: &GridSpec,
) -> Result<AssembledOperator> {
    let n = graph.n();
    if ic.n() != n {
        return Err(Error::input("graph and interface condition differ in size"));
    }
    let big_n = grid.points_per_edge;
    let inner = big_n - 1;
    let mut offsets = Vec::with_capacity(n + 1);
    let mut h = Vec::with_capacity(n);
    let dim = n * inner;
    let mut lower = vec![c64(0.0, 0.0); dim];
    let mut diag = vec![c64(0.0, 0.0); dim];
    let mut upper = vec![c64(0.0, 0.0); dim];

    for (l, edge) in graph.edges().iter().enumerate() {
        let (length, potential, beta) = edge_geometry(edge, grid).map_err(|e| e.at_edge(l))?;
        let hl = length / big_n as f64;
        let inv_h2 = 1.0 / (hl * hl);
        let off = l * inner;
        offsets.push(off);
        h.push(hl);
        for j in 0..inner {
            let x = (j + 1) as f64 * hl;
            diag[off + j] = c64(2.0 * inv_h2 + potential.eval(x), 0.0);
            if j > 0 {
                lower[off + j] = c64(-inv_h2, 0.0);
            }
            if j + 1 < inner {
                upper[off + j] = c64(-inv_h2, 0.0);
            }
        }
        // Outer node: cos β·u_N + sin β·(3u_N − 4u_{N−1} + u_{N−2})/(2h) = 0.
        if beta != 0.0 {
            let (sb, cb) = beta.sin_cos();
            let den = cb + 3.0 * sb / (2.0 * hl);
            if den.abs() < 1e-12 * (1.0 + sb.abs() / hl) {
                return Err(Error::Degenerate(format!(
                    "outer boundary condition on edge {l} cannot be eliminated at this resolution"
                )));
            }
            let s = sb / (2.0 * hl * den);
            // u_N = 4s·u_{N−1} − s·u_{N−2}, entering the last row with −1/h².
            let last = off + inner - 1;
            diag[last] -= c64(4.0 * s * inv_h2, 0.0);
            lower[last] -= c64(-s * inv_h2, 0.0);
        }
    }
    offsets.push(dim);

    // (A − 3BH)·u(0) + BH·w = 0 with H = diag(1/(2h_l)).
    let hdiag = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c64(1.0 / (2.0 * h[i]), 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let bh = ic.b() * &hdiag;
    let coeff_u0 = ic.a() - &bh * c64(3.0, 0.0);
    let g = -invert(&coeff_u0, "discrete vertex system A − 3BH")? * &bh;

    Ok(AssembledOperator {
        n,
        offsets,
        h,
        lower,
        diag,
        upper,
        g,
        vertex_rows: (coeff_u0, bh),
    })
}

impl AssembledOperator {
    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Vertex map `G` with `u(0) = G·w`.
    pub fn vertex_map(&self) -> &CMatrix {
        &self.g
    }

    /// The discretized interface equations `C₀·u(0) + C₁·w = 0`, as `(C₀, C₁)`.
    pub fn vertex_equations(&self) -> &(CMatrix, CMatrix) {
        &self.vertex_rows
    }

    /// Largest `|x|` for which the grid resolves eigenfunctions:
    /// `min_l (N/L_l)²/100`.
    pub fn trust_limit(&self) -> f64 {
        self.h
            .iter()
            .map(|h| 1.0 / (h * h * 100.0))
            .fold(f64::INFINITY, f64::min)
    }

    fn w_of(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|l| {
                let off = self.offsets[l];
                v[off] * 4.0 - v[off + 1]
            })
            .collect()
    }

    /// Vertex values `u(0)` for a grid function.
    pub fn vertex_values(&self, v: &[Complex64]) -> Vec<Complex64> {
        let w = self.w_of(v);
        (0..self.n)
            .map(|i| (0..self.n).map(|k| self.g[(i, k)] * w[k]).sum())
            .collect()
    }

    /// `R·v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dimension();
        let mut out = vec![c64(0.0, 0.0); dim];
        for i in 0..dim {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.lower[i] * v[i - 1];
            }
            if i + 1 < dim {
                acc += self.upper[i] * v[i + 1];
            }
            out[i] = acc;
        }
        let u0 = self.vertex_values(v);
        for l in 0..self.n {
            out[self.offsets[l]] -= u0[l] / (self.h[l] * self.h[l]);
        }
        out
    }

    /// Dense copy of `R` (for small grids and cross-checks).
    pub fn to_dense(&self) -> CMatrix {
        let dim = self.dimension();
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = self.diag[i];
            if i > 0 {
                m[(i, i - 1)] = self.lower[i];
            }
            if i + 1 < dim {
                m[(i, i + 1)] = self.upper[i];
            }
        }
        for l in 0..self.n {
            let row = self.offsets[l];
            let s = -1.0 / (self.h[l] * self.h[l]);
            for k in 0..self.n {
                let gk = self.g[(l, k)] * s;
                let off = self.offsets[k];
                m[(row, off)] += gk * 4.0;
                m[(row, off + 1)] -= gk;
            }
        }
        m
    }

    /// Write the dense matrix as row-major `(re, im)` pairs of little-endian
    /// `f64`, preceded by the dimension as a little-endian `u64`.
    pub fn write_dense_binary<W: Write>(&self, out: &mut W) -> Result<()> {
        const LIMIT: usize = 4096;
        let dim = self.dimension();
        if dim > LIMIT {
            return Err(Error::Unsupported(format!(
                "dense dump limited to dimension {LIMIT}, operator has {dim}"
            )));
        }
        let m = self.to_dense();
        out.write_all(&(dim as u64).to_le_bytes())?;
        for i in 0..dim {
            for j in 0..dim {
                out.write_all(&m[(i, j)].re.to_le_bytes())?;
                out.write_all(&m[(i, j)].im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// `(R − σ)⁻¹` through a tridiagonal factorization and the Woodbury identity.
struct ShiftedSolver<'a> {
    op: &'a AssembledOperator,
    /// Thomas factors: modified diagonal and multipliers.
    piv: Vec<Complex64>,
    mult: Vec<Complex64>,
    /// `Y = (T − σ)⁻¹·U`, one column per edge.
    y: Vec<Vec<Complex64>>,
    /// `(I + G·W·Y)⁻¹`.
    cap_inv: CMatrix,
}

impl<'a> ShiftedSolver<'a> {
    fn new(op: &'a AssembledOperator, sigma: Complex64) -> Result<Self> {
        let dim = op.dimension();
        let mut piv = vec![c64(0.0, 0.0); dim];
        let mut mult = vec![c64(0.0, 0.0); dim];
        for i in 0..dim {
            let d = op.diag[i] - sigma;
            piv[i] = if i == 0 {
                d
            } else {
                mult[i] = op.lower[i] / piv[i - 1];
                d - mult[i] * op.upper[i - 1]
            };
            if piv[i].norm() == 0.0 {
                return Err(Error::Invertibility(format!(
                    "shifted operator is singular at σ = {sigma}"
                )));
            }
        }
        let mut solver = ShiftedSolver {
            op,
            piv,
            mult,
            y: Vec::new(),
            cap_inv: CMatrix::zeros(0, 0),
        };
        let n = op.n;
        let mut y = Vec::with_capacity(n);
        for l in 0..n {
            let mut e = vec![c64(0.0, 0.0); dim];
            e[op.offsets[l]] = c64(-1.0 / (op.h[l] * op.h[l]), 0.0);
            y.push(solver.solve_t(&e));
        }
        // K·Y = G·W·Y.
        let wy = CMatrix::from_fn(n, n, |k, l| {
            let off = op.offsets[k];
            y[l][off] * 4.0 - y[l][off + 1]
        });
        let cap = CMatrix::identity(n, n) + &op.g * wy;
        solver.cap_inv = invert(&cap, "Woodbury capacitance matrix")?;
        solver.y = y;
        Ok(solver)
    }

    fn solve_t(&self, b: &[Complex64]) -> Vec<Complex64> {
        let dim = b.len();
        let mut x = b.to_vec();
        for i in 1..dim {
            let prev = x[i - 1];
            x[i] -= self.mult[i] * prev;
        }
        x[dim - 1] /= self.piv[dim - 1];
        for i in (0..dim - 1).rev() {
            let next = x[i + 1];
            x[i] = (x[i] - self.op.upper[i] * next) / self.piv[i];
        }
        x
    }

    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = self.solve_t(b);
        let n = self.op.n;
        let kx: Vec<Complex64> = {
            let w = self.op.w_of(&x);
            (0..n)
                .map(|i| (0..n).map(|k| self.op.g[(i, k)] * w[k]).sum())
                .collect()
        };
        for l in 0..n {
            let coef: Complex64 = (0..n).map(|k| self.cap_inv[(l, k)] * kx[k]).sum();
            for (xi, yi) in x.iter_mut().zip(&self.y[l]) {
                *xi -= yi * coef;
            }
        }
        x
    }
}

/// Columns of `m` as vectors.
fn columns(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.ncols())
        .map(|j| m.column(j).iter().copied().collect())
        .collect()
}

fn from_columns(cols: &[Vec<Complex64>]) -> CMatrix {
    let rows = cols.first().map_or(0, Vec::len);
    CMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn orthonormalize(cols: &[Vec<Complex64>]) -> CMatrix {
    let m = from_columns(cols);
    m.qr().q()
}

/// Eigenvalues of a small dense complex matrix (diagonal of its Schur form).
fn small_eigenvalues(h: &CMatrix) -> Vec<Complex64> {
    let (_, t) = h.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Right singular vector for the smallest singular value of `m`.
fn smallest_singular_vector(m: &CMatrix) -> Vec<Complex64> {
    let v = svd(m).v;
    v.column(v.ncols() - 1).iter().copied().collect()
}

/// Eigenvalues of `R` within distance `radius` of `center` (real), found by
/// shift-and-invert block iteration with a Rayleigh–Ritz step.
pub fn eigenvalues_near(
    op: &AssembledOperator,
    center: f64,
    radius: f64,
) -> Result<Vec<Complex64>> {
    let dim = op.dimension();
    let delta = radius.max(1e-3 * (1.0 + center.abs()));
    let sigma = c64(center, delta);
    let r_in = (radius * radius + delta * delta).sqrt();
    let solver = ShiftedSolver::new(op, sigma)?;
    let scale = op.h.iter().map(|h| 4.0 / (h * h)).fold(0.0, f64::max);
    let res_tol = 1e-11 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let mut p = 8.min(dim);
    loop {
        let mut v = orthonormalize(&columns(&gaussian_matrix(dim, p, &mut rng)));
        let mut accepted = None;
        let mut previous: Option<Vec<Complex64>> = None;
        for it in 0..400 {
            let next: Vec<Vec<Complex64>> = columns(&v).iter().map(|c| solver.solve(c)).collect();
            v = orthonormalize(&next);
            if it < 8 || it % 4 != 0 {
                continue;
            }
            let cols = columns(&v);
            let rv = from_columns(&cols.iter().map(|c| op.apply(c)).collect::<Vec<_>>());
            let h = v.adjoint() * &rv;
            let theta = small_eigenvalues(&h);
            let near: Vec<Complex64> = theta
                .iter()
                .copied()
                .filter(|t| (t - sigma).norm() <= 1.5 * r_in)
                .collect();
            let converged = near.iter().all(|&t| {
                let y = smallest_singular_vector(&(&h - CMatrix::identity(p, p) * t));
                let y = CMatrix::from_column_slice(p, 1, &y);
                let res = (&rv * &y - &v * &y * t).norm();
                res <= res_tol
            });
            let mut sorted_near: Vec<Complex64> = near.clone();
            sorted_near.sort_by(|a, b| a.re.total_cmp(&b.re));
            let steady = previous.as_ref().is_some_and(|prev| {
                prev.len() == sorted_near.len()
                    && prev
                        .iter()
                        .zip(&sorted_near)
                        .all(|(a, b)| (a - b).norm() <= 1e-10 * (1.0 + b.norm()))
            });
            previous = Some(sorted_near.clone());
            if converged && steady {
                let far = theta.iter().map(|t| (t - sigma).norm()).fold(0.0, f64::max);
                accepted = Some((sorted_near, far));
                break;
            }
        }
        let guard = (p / 4).max(2);
        match accepted {
            Some((near, far)) if near.len() + guard <= p && far >= 2.0 * r_in => {
                return Ok(near
                    .into_iter()
                    .filter(|t| (t - sigma).norm() <= r_in * (1.0 + 1e-12))
                    .collect());
            }
            _ if p >= dim => {
                return Err(Error::Solver(
                    "block iteration did not isolate the eigenvalues near the window".into(),
                ))
            }
            _ => p = (2 * p).min(dim),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub center: f64,
    pub multiplicity: usize,
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub window: (f64, f64),
    pub clusters: Vec<Cluster>,
    /// Eigenvalues dropped for having `|Im λ| > cluster_radius`.
    pub discarded: usize,
}

impl SpectrumReport {
    /// Cluster whose center lies within `tol` of `x`.
    pub fn cluster_near(&self, x: f64, tol: f64) -> Option<&Cluster> {
        self.clusters.iter().find(|c| (c.center - x).abs() <= tol)
    }

    /// `center, multiplicity, spread`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "center,multiplicity,spread")?;
        for c in &self.clusters {
            writeln!(out, "{},{},{}", c.center, c.multiplicity, c.spread)?;
        }
        Ok(())
    }
}

/// Group real eigenvalues into clusters of diameter-chained radius.
pub fn cluster_eigenvalues(
    eigs: &[Complex64],
    window: (f64, f64),
    cluster_radius: f64,
) -> SpectrumReport {
    let (lo, hi) = window;
    let mut discarded = 0;
    let mut real: Vec<f64> = Vec::new();
    for e in eigs {
        if e.im.abs() > cluster_radius {
            discarded += 1;
        } else if e.re >= lo && e.re <= hi {
            real.push(e.re);
        }
    }
    real.sort_by(f64::total_cmp);
    let mut clusters = Vec::new();
    let mut i = 0;
    while i < real.len() {
        let mut j = i + 1;
        while j < real.len() && real[j] - real[j - 1] <= cluster_radius {
            j += 1;
        }
        let members = &real[i..j];
        clusters.push(Cluster {
            center: members.iter().sum::<f64>() / members.len() as f64,
            multiplicity: members.len(),
            spread: members[members.len() - 1] - members[0],
        });
        i = j;
    }
    SpectrumReport {
        window,
        clusters,
        discarded,
    }
}

fn check_window(op: &AssembledOperator, window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::input(format!("invalid window [{lo}, {hi}]")));
    }
    let limit = op.trust_limit();
    if lo.abs().max(hi.abs()) > limit {
        return Err(Error::input(format!(
            "window [{lo}, {hi}] leaves the trusted range |x| <= {limit:.3}"
        )));
    }
    Ok(())
}

/// Eigenvalue clusters of `R` inside `window`.
pub fn eig_clusters(
    op: &AssembledOperator,
    window: (f64, f64),
    cluster_radius: f64,
) -> Result<SpectrumReport> {
    check_window(op, window)?;
    let (lo, hi) = window;
    if lo == hi {
        return Ok(SpectrumReport {
            window,
            clusters: Vec::new(),
            discarded: 0,
        });
    }
    let eigs = eigenvalues_near(op, 0.5 * (lo + hi), 0.5 * (hi - lo))?;
    Ok(cluster_eigenvalues(&eigs, window, cluster_radius))
}

/// [`eig_clusters`] by a full dense eigensolve (small grids only).
pub fn eig_clusters_dense(
    op: &AssembledOperator,
    window: (f64, f64),
    cluster_radius: f64,
) -> Result<SpectrumReport> {
    check_window(op, window)?;
    let eigs = small_eigenvalues(&op.to_dense());
    Ok(cluster_eigenvalues(&eigs, window, cluster_radius))
}

#[derive(Clone, Debug)]
pub struct ResolventRankReport {
    pub observed: usize,
    pub codim: usize,
    pub singular_values: Vec<f64>,
}

/// Rank of `(R₁ − z)⁻¹ − (R₂ − z)⁻¹`, counting singular values above
/// `svd_threshold` times the larger resolvent norm, checked against the codimension of
/// the intersection of the two Lagrange planes.
pub fn resolvent_rank_diff(
    graph: &StarGraph,
    ic1: &InterfaceCondition,
    ic2: &InterfaceCondition,
    z: Complex64,
    grid: &GridSpec,
    svd_threshold: f64,
) -> Result<ResolventRankReport> {
    if z.im == 0.0 {
        return Err(Error::input("resolvents are compared off the real axis"));
    }
    if !(svd_threshold > 0.0 && svd_threshold < 1.0) {
        return Err(Error::input("SVD threshold must lie in (0, 1)"));
    }
    let shifted = |ic: &InterfaceCondition| -> Result<CMatrix> {
        let op = assemble(graph, ic, grid)?;
        let m = op.to_dense();
        let dim = m.nrows();
        let shifted = m - CMatrix::identity(dim, dim) * z;
        shifted
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Invertibility(format!("R − z is singular at z = {z}")))
    };
    let (res1, res2) = (shifted(ic1)?, shifted(ic2)?);
    // Measure against the size of the resolvents: when the two operators
    // coincide the difference is pure round-off and has no scale of its own.
    let scale = singular_values(&res1)[0].max(singular_values(&res2)[0]);
    let sv = singular_values(&(res1 - res2));
    let observed = sv.iter().filter(|&&s| s > svd_threshold * scale).count();
    let codim = coupling_codim(ic1, ic2, RankTolerance::default())?;
    if observed > codim {
        return Err(Error::TheoremViolation(format!(
            "resolvent difference has rank {observed} > codim {codim}"
        )));
    }
    let keep = (codim + 2).min(sv.len());
    Ok(ResolventRankReport {
        observed,
        codim,
        singular_values: sv[..keep].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small() -> GridSpec {
        GridSpec::new(60, 40.0).unwrap()
    }

    #[test]
    fn decoupled_matches_dirichlet_blocks() {
        let g = StarGraph::dirichlet(&[PI, PI]).unwrap();
        let op = assemble(&g, &InterfaceCondition::decoupled(2).unwrap(), &small()).unwrap();
        assert!(op.vertex_map().norm() < 1e-15);
        let d = op.to_dense();
        let inner = 59;
        assert!(d.view((0, inner), (inner, inner)).norm() == 0.0);
        let rep = eig_clusters_dense(&op, (0.5, 1.5), 1e-3).unwrap();
        assert_eq!(rep.clusters.len(), 1);
        assert_eq!(rep.clusters[0].multiplicity, 2);
    }

    #[test]
    fn standard_vertex_equations() {
        let g = StarGraph::dirichlet(&[PI; 3]).unwrap();
        let op = assemble(&g, &InterfaceCondition::standard(3).unwrap(), &small()).unwrap();
        let (c0, c1) = op.vertex_equations();
        let h = PI / 60.0;
        // Continuity rows carry no derivative terms.
        assert!(c1.rows(0, 2).norm() == 0.0);
        assert_eq!(c0[(0, 0)], c64(1.0, 0.0));
        assert_eq!(c0[(0, 2)], c64(-1.0, 0.0));
        // Kirchhoff row: Σ (−3u_{l,0} + w_l)/(2h).
        for l in 0..3 {
            assert!((c0[(2, l)] + c64(3.0 / (2.0 * h), 0.0)).norm() < 1e-9);
            assert!((c1[(2, l)] - c64(1.0 / (2.0 * h), 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn apply_agrees_with_dense() {
        let g = StarGraph::new(vec![
            EdgeSpec::dirichlet(PI),
            EdgeSpec::regular(2.0, 0.8),
            EdgeSpec::free_half_line(),
        ])
        .unwrap();
        let op = assemble(&g, &InterfaceCondition::standard(3).unwrap(), &small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<Complex64> = gaussian_matrix(op.dimension(), 1, &mut rng)
            .iter()
            .copied()
            .collect();
        let dense = op.to_dense() * CMatrix::from_column_slice(op.dimension(), 1, &v);
        let fast = op.apply(&v);
        let err: f64 = fast
            .iter()
            .zip(dense.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn shifted_solver_inverts() {
        let g = StarGraph::dirichlet(&[PI, PI, PI / 2.0]).unwrap();
        let op = assemble(&g, &InterfaceCondition::standard(3).unwrap(), &small()).unwrap();
        let sigma = c64(1.0, 0.3);
        let solver = ShiftedSolver::new(&op, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b: Vec<Complex64> = gaussian_matrix(op.dimension(), 1, &mut rng)
            .iter()
            .copied()
            .collect();
        let x = solver.solve(&b);
        let rx = op.apply(&x);
        let err: f64 = rx
            .iter()
            .zip(&x)
            .zip(&b)
            .map(|((r, x), b)| (r - x * sigma - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn windowed_iteration_matches_dense() {
        let g = StarGraph::dirichlet(&[PI, PI, PI / 2.0]).unwrap();
        let op = assemble(
            &g,
            &InterfaceCondition::standard(3).unwrap(),
            &GridSpec::new(120, 40.0).unwrap(),
        )
        .unwrap();
        for window in [(0.5, 1.5), (3.5, 4.5), (0.2, 7.0)] {
            let dense = eig_clusters_dense(&op, window, 1e-3).unwrap();
            let fast = eig_clusters(&op, window, 1e-3).unwrap();
            assert_eq!(dense.clusters.len(), fast.clusters.len(), "{window:?}");
            for (a, b) in dense.clusters.iter().zip(&fast.clusters) {
                assert_eq!(a.multiplicity, b.multiplicity);
                assert!((a.center - b.center).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn neumann_vertex_cluster() {
        let g = StarGraph::dirichlet(&[PI, PI]).unwrap();
        let op = assemble(
            &g,
            &InterfaceCondition::antidecoupled(2).unwrap(),
            &GridSpec::new(200, 40.0).unwrap(),
        )
        .unwrap();
        let rep = eig_clusters(&op, (0.2, 0.3), 1e-3).unwrap();
        assert_eq!(rep.clusters.len(), 1);
        assert_eq!(rep.clusters[0].multiplicity, 2);
        assert!((rep.clusters[0].center - 0.25).abs() < 2e-3);
    }

    #[test]
    fn window_checks() {
        let g = StarGraph::dirichlet(&[PI, PI]).unwrap();
        let op = assemble(&g, &InterfaceCondition::standard(2).unwrap(), &small()).unwrap();
        assert!(eig_clusters(&op, (0.0, 1e3), 1e-3).is_err());
        assert!(eig_clusters(&op, (2.0, 1.0), 1e-3).is_err());
        assert!(eig_clusters(&op, (1.0, 1.0), 1e-3)
            .unwrap()
            .clusters
            .is_empty());
        let art = StarGraph::new(vec![
            EdgeSpec::dirichlet(PI),
            EdgeSpec::Artificial { m_const: 0.0 },
        ])
        .unwrap();
        assert!(matches!(
            assemble(&art, &InterfaceCondition::standard(2).unwrap(), &small()),
            Err(Error::Edge { .. })
        ));
    }

    #[test]
    fn resolvent_ranks() {
        let g = StarGraph::dirichlet(&[PI; 3]).unwrap();
        let grid = GridSpec::new(30, 40.0).unwrap();
        let st = InterfaceCondition::standard(3).unwrap();
        let dec = InterfaceCondition::decoupled(3).unwrap();
        let same = resolvent_rank_diff(&g, &st, &st, c64(0.0, 1.0), &grid, 1e-6).unwrap();
        assert_eq!(same.observed, 0);
        let r = resolvent_rank_diff(&g, &st, &dec, c64(0.0, 1.0), &grid, 1e-6).unwrap();
        assert_eq!((r.observed, r.codim), (1, 1));
        let g2 = StarGraph::dirichlet(&[PI; 2]).unwrap();
        let r = resolvent_rank_diff(
            &g2,
            &InterfaceCondition::antidecoupled(2).unwrap(),
            &InterfaceCondition::decoupled(2).unwrap(),
            c64(0.0, 2.0),
            &grid,
            1e-6,
        )
        .unwrap();
        assert_eq!((r.observed, r.codim), (2, 2));
    }

    #[test]
    fn csv_and_binary_dump() {
        let g = StarGraph::dirichlet(&[PI, PI]).unwrap();
        let op = assemble(
            &g,
            &InterfaceCondition::standard(2).unwrap(),
            &GridSpec::new(64, 40.0).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        op.write_dense_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 126 * 126 * 16);
        let rep = eig_clusters(&op, (0.5, 1.5), 1e-2).unwrap();
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .starts_with("center,multiplicity,spread\n"));
    }
}
