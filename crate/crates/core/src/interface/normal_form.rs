use crate::error::{Error, Result};
use crate::numeric::{
    c64, combinations, inverse_condition, invert, permutation_matrix, rank_tol, select_columns,
    submatrix, svd, CMatrix, RankTolerance,
};

use super::{satisfies_d4, validate, InterfaceCondition};

/// `(A, B) ~ ((I A₁; 0 A₂), (0 0; −A₁* I))` with `A₂ = A₂*`, realized as
/// `Q·(A, B)·diag(P, P)`.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub n: usize,
    pub r: usize,
    /// `(n−r) × r`.
    pub a1: CMatrix,
    /// `r × r`, Hermitian.
    pub a2: CMatrix,
    pub q: CMatrix,
    pub p: CMatrix,
    /// Edge `permutation[j]` of the original numbering sits at position `j`
    /// in normal-form coordinates.
    pub permutation: Vec<usize>,
}

impl NormalForm {
    /// The block pair `(A', B')` in normal-form coordinates.
    pub fn reassembled(&self) -> (CMatrix, CMatrix) {
        let (n, r) = (self.n, self.r);
        let m = n - r;
        let mut a = CMatrix::zeros(n, n);
        let mut b = CMatrix::zeros(n, n);
        a.view_mut((0, 0), (m, m))
            .copy_from(&CMatrix::identity(m, m));
        a.view_mut((0, m), (m, r)).copy_from(&self.a1);
        a.view_mut((m, m), (r, r)).copy_from(&self.a2);
        b.view_mut((m, 0), (r, m)).copy_from(&(-self.a1.adjoint()));
        b.view_mut((m, m), (r, r))
            .copy_from(&CMatrix::identity(r, r));
        (a, b)
    }

    pub fn as_interface(&self, tol: RankTolerance) -> Result<InterfaceCondition> {
        let (a, b) = self.reassembled();
        validate(a, b, tol)
    }

    /// `‖Q·(A, B)·diag(P, P) − (A', B')‖_F`.
    pub fn reproduction_residual(&self, ic: &InterfaceCondition) -> f64 {
        let (a, b) = self.reassembled();
        (&self.q * ic.a() * &self.p - a).norm() + (&self.q * ic.b() * &self.p - b).norm()
    }

    /// Reorder a per-edge list into normal-form coordinates.
    pub fn permute<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.permutation.iter().map(|&i| items[i].clone()).collect()
    }
}

/// Inverse condition number above which a block counts as safely invertible.
const WELL_CONDITIONED: f64 = 1e-3;

fn bottom_rows(m: &CMatrix, from: usize) -> CMatrix {
    m.rows(from, m.nrows() - from).into_owned()
}

/// Reduce `(A, B)` to normal form following the three-step construction:
/// kill the top `n−r` rows of `B`, pick the lexicographically smallest set of
/// leading columns making both diagonal blocks invertible (and well
/// conditioned when possible), normalize both
/// diagonal blocks and read off `A₁`, `A₂`.
pub fn to_normal_form(ic: &InterfaceCondition, tol: RankTolerance) -> Result<NormalForm> {
    let n = ic.n();
    let r = ic.rank_b();
    let m = n - r;

    if r == 0 {
        let q = invert(ic.a(), "A")?;
        return Ok(NormalForm {
            n,
            r,
            a1: CMatrix::zeros(n, 0),
            a2: CMatrix::zeros(0, 0),
            q,
            p: CMatrix::identity(n, n),
            permutation: (0..n).collect(),
        });
    }
    if !satisfies_d4(ic, tol)? {
        return Err(Error::D4Violation(
            "normal form needs every r columns of B independent".into(),
        ));
    }

    // Step 1: rows of Q1 are left singular vectors of B, null directions
    // first. They are the right singular vectors of B*.
    let v = svd(&ic.b().adjoint()).v;
    let row_order: Vec<usize> = (r..n).chain(0..r).collect();
    let q1 = CMatrix::from_fn(n, n, |i, j| v[(j, row_order[i])].conj());
    let q1a = &q1 * ic.a();
    let q1b = &q1 * ic.b();

    // Step 2: admissible permutation.
    let top_a = q1a.rows(0, m).into_owned();
    let low_b = bottom_rows(&q1b, m);
    // First admissible set in lexicographic order whose blocks are also well
    // conditioned; otherwise the best-conditioned admissible set.
    let mut best: Option<(f64, Vec<usize>)> = None;
    for lead in combinations(n, m) {
        let trail: Vec<usize> = (0..n).filter(|j| !lead.contains(j)).collect();
        let lead_block = select_columns(&top_a, &lead);
        let trail_block = select_columns(&low_b, &trail);
        let lead_ok = m == 0 || rank_tol(&lead_block, tol)? == m;
        if !lead_ok || rank_tol(&trail_block, tol)? != r {
            continue;
        }
        let lead_cond = if m == 0 {
            1.0
        } else {
            inverse_condition(&lead_block)
        };
        let score = lead_cond.min(inverse_condition(&trail_block));
        let perm: Vec<usize> = lead.iter().chain(&trail).copied().collect();
        if score >= WELL_CONDITIONED {
            best = Some((score, perm));
            break;
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, perm));
        }
    }
    let permutation = best.map(|(_, p)| p).ok_or_else(|| {
        Error::D4Violation("no column permutation gives invertible diagonal blocks".into())
    })?;
    let p = permutation_matrix(&permutation);

    // Step 3: normalize. Row operations mixing the top rows into the bottom
    // ones leave B untouched because the top rows of Q1·B vanish.
    let mut q = q1;
    if m > 0 {
        let lead_block = submatrix(&q1a, &(0..m).collect::<Vec<_>>(), &permutation[..m]);
        let q2 = invert(&lead_block, "leading block of A")?;
        let mut step = CMatrix::identity(n, n);
        step.view_mut((0, 0), (m, m)).copy_from(&q2);
        q = step * q;
        let ap = &q * ic.a() * &p;
        let a21 = ap.view((m, 0), (r, m)).into_owned();
        let mut elim = CMatrix::identity(n, n);
        elim.view_mut((m, 0), (r, m)).copy_from(&(-a21));
        q = elim * q;
    }
    let bp = &q * ic.b() * &p;
    let q3 = invert(&bp.view((m, m), (r, r)).into_owned(), "trailing block of B")?;
    let mut step = CMatrix::identity(n, n);
    step.view_mut((m, m), (r, r)).copy_from(&q3);
    q = step * q;

    let ap = &q * ic.a() * &p;
    let a1 = ap.view((0, m), (m, r)).into_owned();
    let a2_raw = ap.view((m, m), (r, r)).into_owned();
    let scale = 1.0 + ap.norm();
    let herm_defect = (&a2_raw - a2_raw.adjoint()).norm();
    if herm_defect > 1e2 * tol.value() * scale {
        return Err(Error::Inconsistency(format!(
            "A2 not Hermitian after reduction (defect {herm_defect:.3e})"
        )));
    }
    let a2 = (&a2_raw + a2_raw.adjoint()) * c64(0.5, 0.0);
    let nf = NormalForm {
        n,
        r,
        a1,
        a2,
        q,
        p,
        permutation,
    };
    let residual = nf.reproduction_residual(ic);
    if residual > 1e2 * tol.value() * scale {
        return Err(Error::Inconsistency(format!(
            "normal form does not reproduce the pair (residual {residual:.3e})"
        )));
    }
    Ok(nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::lagrange_plane;
    use crate::numeric::{subspace_equal, vstack};

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    #[test]
    fn standard_two_edges() {
        let nf = to_normal_form(&InterfaceCondition::standard(2).unwrap(), tol()).unwrap();
        assert_eq!((nf.n, nf.r), (2, 1));
        assert!((nf.a1[(0, 0)] - c64(-1.0, 0.0)).norm() < 1e-12);
        assert!(nf.a2[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn standard_three_edges() {
        let ic = InterfaceCondition::standard(3).unwrap();
        let nf = to_normal_form(&ic, tol()).unwrap();
        assert_eq!(nf.permutation, vec![0, 1, 2]);
        assert!((nf.a1[(0, 0)] - c64(-1.0, 0.0)).norm() < 1e-12);
        assert!((nf.a1[(1, 0)] - c64(-1.0, 0.0)).norm() < 1e-12);
        assert!(nf.a2[(0, 0)].norm() < 1e-12);
        // The plane of the original pair is carried to that of the normal form.
        let theta = lagrange_plane(&ic, tol()).unwrap();
        let theta_nf = lagrange_plane(&nf.as_interface(tol()).unwrap(), tol()).unwrap();
        let pp = vstack(
            &crate::numeric::hstack(&nf.p, &CMatrix::zeros(3, 3)),
            &crate::numeric::hstack(&CMatrix::zeros(3, 3), &nf.p),
        );
        assert!(subspace_equal(&theta.basis, &(pp * theta_nf.basis), tol()).unwrap());
    }

    #[test]
    fn full_rank_b() {
        let nf = to_normal_form(&InterfaceCondition::antidecoupled(3).unwrap(), tol()).unwrap();
        assert_eq!(nf.a1.shape(), (0, 3));
        assert!(nf.a2.norm() < 1e-12);
        assert!((&nf.q - CMatrix::identity(3, 3)).norm() < 1e-12);
        assert_eq!(nf.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn decoupled_is_trivial() {
        let nf = to_normal_form(&InterfaceCondition::decoupled(3).unwrap(), tol()).unwrap();
        assert_eq!(nf.r, 0);
        assert_eq!(nf.a2.shape(), (0, 0));
    }

    #[test]
    fn rejects_non_mixing_condition() {
        // Edges 2 and 3 enter B through identical columns: D4 fails.
        let a = CMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0].map(|x| c64(x, 0.0)),
        );
        let b = CMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0].map(|x| c64(x, 0.0)),
        );
        let ic = validate(a, b, tol()).unwrap();
        assert_eq!(ic.rank_b(), 2);
        assert!(matches!(
            to_normal_form(&ic, tol()),
            Err(Error::D4Violation(_))
        ));
    }
}
