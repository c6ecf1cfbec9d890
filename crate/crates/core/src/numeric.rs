//! Tolerance-aware dense complex linear algebra.
//!
//! Everything here works on `DMatrix<Complex64>` and decides ranks from
//! singular values with a threshold relative to the largest one. Columns of a
//! matrix are used as the representation of a list of vectors (a spanning set
//! of a subspace).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest size for which exhaustive minor enumeration is allowed.
pub const MAX_MINOR_DIM: usize = 12;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Relative singular-value threshold used to decide numerical rank.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct RankTolerance(f64);

impl RankTolerance {
    pub const DEFAULT: RankTolerance = RankTolerance(1e-8);

    pub fn new(relative_threshold: f64) -> Result<Self> {
        if relative_threshold > 0.0 && relative_threshold < 1.0 {
            Ok(RankTolerance(relative_threshold))
        } else {
            Err(Error::input(format!(
                "rank tolerance must lie in (0, 1), got {relative_threshold}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::input("matrix has non-finite entries"))
    }
}

fn ensure_nonempty(m: &CMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        Err(Error::input("matrix is empty"))
    } else {
        Ok(())
    }
}

/// Singular value decomposition `M = U·diag(σ)·V*` with `σ` descending.
/// `u` has one column per singular value (zero where `σ = 0`), `v` is a full
/// unitary basis of the domain.
#[derive(Clone, Debug)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

const MAX_JACOBI_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi iteration on the columns of `m`. Wide
/// matrices are padded with zero rows so that `v` always spans the domain.
fn jacobi(m: &CMatrix, want_v: bool) -> Svd {
    let (rows, cols) = m.shape();
    let height = rows.max(cols);
    // Work on m/‖m‖ so that the negligible-column floor below is absolute.
    let scale = m.norm();
    let mut w = CMatrix::zeros(height, cols);
    if scale > 0.0 {
        w.view_mut((0, 0), (rows, cols))
            .copy_from(&(m / c64(scale, 0.0)));
    }
    let floor = 1e-3 * f64::EPSILON;
    let mut v = if want_v {
        CMatrix::identity(cols, cols)
    } else {
        CMatrix::zeros(0, cols)
    };
    let rotate = |mat: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: Complex64| {
        for i in 0..mat.nrows() {
            let a = mat[(i, p)];
            let b = mat[(i, q)] * phase.conj();
            mat[(i, p)] = a * c - b * s;
            mat[(i, q)] = a * s + b * c;
        }
    };
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (col_p, col_q) = (w.column(p), w.column(q));
                let (np, nq) = (col_p.norm(), col_q.norm());
                // Columns this small are numerically zero; rotating them only
                // loses unitarity of V to underflow.
                if np <= floor || nq <= floor {
                    continue;
                }
                let (alpha, beta) = (np * np, nq * nq);
                let gamma = col_p.dotc(&col_q);
                let g = gamma.norm();
                if g <= f64::EPSILON * np * nq {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s, phase);
                if want_v {
                    rotate(&mut v, p, q, c, s, phase);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let unit_norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| unit_norms[b].total_cmp(&unit_norms[a]));
    let mut u = CMatrix::zeros(rows, cols);
    let mut v_sorted = CMatrix::zeros(v.nrows(), cols);
    for (dst, &src) in order.iter().enumerate() {
        if unit_norms[src] > 0.0 {
            let col = w.column(src).rows(0, rows) / c64(unit_norms[src], 0.0);
            u.set_column(dst, &col);
        }
        if want_v {
            v_sorted.set_column(dst, &v.column(src));
        }
    }
    Svd {
        singular_values: order.iter().map(|&i| unit_norms[i] * scale).collect(),
        u,
        v: v_sorted,
    }
}

pub fn svd(m: &CMatrix) -> Svd {
    jacobi(m, true)
}

fn svd_full(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let d = svd(m);
    (d.singular_values, d.v)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    jacobi(m, false).singular_values
}

fn count_above(sv: &[f64], tol: RankTolerance) -> usize {
    match sv.first() {
        Some(&s1) if s1 > 0.0 => sv.iter().filter(|&&s| s > tol.value() * s1).count(),
        _ => 0,
    }
}

/// Number of singular values above `tol · σ₁`.
pub fn rank_tol(m: &CMatrix, tol: RankTolerance) -> Result<usize> {
    ensure_nonempty(m)?;
    ensure_finite(m)?;
    Ok(count_above(&singular_values(m), tol))
}

/// Orthonormal basis (as columns) of the numerical kernel of `m`.
pub fn null_space(m: &CMatrix, tol: RankTolerance) -> Result<CMatrix> {
    ensure_nonempty(m)?;
    ensure_finite(m)?;
    let (sv, v) = svd_full(m);
    let rank = count_above(&sv, tol);
    let cols = m.ncols();
    Ok(v.columns(rank, cols - rank).into_owned())
}

/// Orthonormal basis of the column span of `m`. Matrices with zero columns
/// span the zero subspace.
pub fn range_basis(m: &CMatrix, tol: RankTolerance) -> Result<CMatrix> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Ok(CMatrix::zeros(m.nrows(), 0));
    }
    ensure_finite(m)?;
    let d = svd(m);
    let rank = count_above(&d.singular_values, tol);
    Ok(d.u.columns(0, rank).into_owned())
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`
/// inside `C^height`.
pub fn orth_complement(basis: &CMatrix, tol: RankTolerance) -> Result<CMatrix> {
    let height = basis.nrows();
    if basis.ncols() == 0 {
        return Ok(CMatrix::identity(height, height));
    }
    null_space(&basis.adjoint(), tol)
}

/// Dimension of the span of the columns of `m` (zero-column matrices allowed).
pub fn span_dim(m: &CMatrix, tol: RankTolerance) -> Result<usize> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Ok(0);
    }
    rank_tol(m, tol)
}

pub fn hstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "hstack height mismatch");
    let mut out = CMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols(), "vstack width mismatch");
    let mut out = CMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Dimension of the intersection of two column spans.
pub fn intersection_dim(u: &CMatrix, v: &CMatrix, tol: RankTolerance) -> Result<usize> {
    if u.nrows() != v.nrows() {
        return Err(Error::input(
            "subspaces live in spaces of different dimension",
        ));
    }
    let du = span_dim(u, tol)?;
    let dv = span_dim(v, tol)?;
    let dsum = span_dim(&hstack(u, v), tol)?;
    Ok(du + dv - dsum)
}

/// Whether the column spans of `u` and `v` coincide: bases are orthonormalized
/// and each is projected onto the other; both residuals must stay below `tol`.
pub fn subspace_equal(u: &CMatrix, v: &CMatrix, tol: RankTolerance) -> Result<bool> {
    if u.nrows() != v.nrows() {
        return Err(Error::input(format!(
            "column heights differ: {} vs {}",
            u.nrows(),
            v.nrows()
        )));
    }
    let ou = range_basis(u, tol)?;
    let ov = range_basis(v, tol)?;
    if ou.ncols() != ov.ncols() {
        return Ok(false);
    }
    if ou.ncols() == 0 {
        return Ok(true);
    }
    let residual = |a: &CMatrix, b: &CMatrix| (a - b * (b.adjoint() * a)).norm();
    Ok(residual(&ou, &ov) <= tol.value() && residual(&ov, &ou) <= tol.value())
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

pub fn submatrix(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

pub fn determinant(m: &CMatrix) -> Complex64 {
    if m.nrows() == 0 {
        return c64(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_minor_size(m: &CMatrix) -> Result<()> {
    ensure_nonempty(m)?;
    ensure_finite(m)?;
    if m.nrows() > MAX_MINOR_DIM || m.ncols() > MAX_MINOR_DIM {
        return Err(Error::input(format!(
            "minor enumeration limited to {MAX_MINOR_DIM}x{MAX_MINOR_DIM}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn minors_of_size_nonzero(m: &CMatrix, k: usize, scale: f64, tol: RankTolerance) -> bool {
    let threshold = tol.value() * scale.powi(k as i32);
    let row_sets = combinations(m.nrows(), k);
    let col_sets = combinations(m.ncols(), k);
    row_sets.iter().all(|rows| {
        col_sets
            .iter()
            .all(|cols| determinant(&submatrix(m, rows, cols)).norm() > threshold)
    })
}

/// True iff every square minor (of every size) is nonzero, a minor of size `k`
/// counting as zero when its modulus is at most `tol · max|m_ij|^k`.
pub fn all_minors_nonzero(m: &CMatrix, tol: RankTolerance) -> Result<bool> {
    check_minor_size(m)?;
    let scale = max_abs(m);
    if scale == 0.0 {
        return Ok(false);
    }
    let kmax = m.nrows().min(m.ncols());
    Ok((1..=kmax).all(|k| minors_of_size_nonzero(m, k, scale, tol)))
}

/// True iff every minor of size `nrows` (one per choice of columns) is nonzero.
pub fn maximal_minors_nonzero(m: &CMatrix, tol: RankTolerance) -> Result<bool> {
    check_minor_size(m)?;
    let scale = max_abs(m);
    if scale == 0.0 {
        return Ok(false);
    }
    if m.nrows() > m.ncols() {
        return Ok(false);
    }
    Ok(minors_of_size_nonzero(m, m.nrows(), scale, tol))
}

/// `(M − M*) / 2i`.
pub fn imag_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c64(0.0, -0.5)
}

/// Permutation matrix `P` with `P e_j = e_{perm[j]}`; right-multiplying a
/// matrix by `P` moves its column `perm[j]` to position `j`.
pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let n = perm.len();
    let mut p = CMatrix::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        p[(i, j)] = c64(1.0, 0.0);
    }
    p
}

pub fn diag(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            c64(values[i], 0.0)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// Smallest eigenvalue of a Hermitian matrix (symmetrized before solving).
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()) * c64(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Ratio of smallest to largest singular value (0 for singular input).
pub fn inverse_condition(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn invert(m: &CMatrix, what: &str) -> Result<CMatrix> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    if inverse_condition(m) < 1e-14 {
        return Err(Error::Invertibility(format!(
            "{what} is numerically singular"
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Invertibility(format!("{what} is singular")))
}
