//! Lagrange planes `θ_{A,B} = ker(A, B) ⊂ Cⁿ × Cⁿ` and the rank-reduction
//! construction built on them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{
    c64, combinations, hstack, null_space, orth_complement, range_basis, rank_tol, span_dim,
    vstack, CMatrix, RankTolerance,
};

use super::random::gaussian_matrix;
use super::{j_matrix, satisfies_d4, validate, InterfaceCondition};

const MAX_ATTEMPTS: usize = 64;
const NEUTRALITY_TOL: f64 = 1e-8;

/// A maximal neutral subspace of `Cⁿ × Cⁿ` for `[u, v] = v*Ju`.
#[derive(Clone, Debug)]
pub struct LagrangePlane {
    pub n: usize,
    /// `2n × n`, orthonormal columns.
    pub basis: CMatrix,
}

impl LagrangePlane {
    /// Orthonormalize `basis` and check it spans an `n`-dimensional neutral
    /// subspace of `C^{2n}`.
    pub fn from_basis(basis: &CMatrix, tol: RankTolerance) -> Result<Self> {
        if !basis.nrows().is_multiple_of(2) || basis.nrows() == 0 {
            return Err(Error::input("plane basis must have even, nonzero height"));
        }
        let n = basis.nrows() / 2;
        let q = range_basis(basis, tol)?;
        if q.ncols() != n {
            return Err(Error::Inconsistency(format!(
                "plane has dimension {} instead of {n}",
                q.ncols()
            )));
        }
        let defect = neutrality_defect(&q);
        if defect > NEUTRALITY_TOL {
            return Err(Error::Inconsistency(format!(
                "plane is not neutral (defect {defect:.3e})"
            )));
        }
        Ok(LagrangePlane { n, basis: q })
    }

    /// A pair `(A, B)` with `ker(A, B) = θ`: rows are an orthonormal basis of
    /// the orthogonal complement of `θ`.
    pub fn to_interface(&self, tol: RankTolerance) -> Result<InterfaceCondition> {
        let n = self.n;
        let rows = orth_complement(&self.basis, tol)?.adjoint();
        if rows.nrows() != n {
            return Err(Error::Inconsistency(format!(
                "complement of a Lagrange plane has dimension {}",
                rows.nrows()
            )));
        }
        let a = rows.columns(0, n).into_owned();
        let b = rows.columns(n, n).into_owned();
        validate(a, b, tol)
    }
}

/// `‖Θ*JΘ‖_F` for an orthonormal basis `Θ`.
fn neutrality_defect(basis: &CMatrix) -> f64 {
    let j = j_matrix(basis.nrows() / 2);
    (basis.adjoint() * j * basis).norm()
}

pub fn lagrange_plane(ic: &InterfaceCondition, tol: RankTolerance) -> Result<LagrangePlane> {
    let basis = null_space(&ic.block(), tol)?;
    if basis.ncols() != ic.n() {
        return Err(Error::Inconsistency(format!(
            "ker(A, B) has dimension {} for n = {}",
            basis.ncols(),
            ic.n()
        )));
    }
    let defect = neutrality_defect(&basis);
    if defect > NEUTRALITY_TOL {
        return Err(Error::Inconsistency(format!(
            "ker(A, B) is not neutral (defect {defect:.3e})"
        )));
    }
    Ok(LagrangePlane { n: ic.n(), basis })
}

/// `n − dim(θ₁ ∩ θ₂)`.
pub fn coupling_codim(
    ic1: &InterfaceCondition,
    ic2: &InterfaceCondition,
    tol: RankTolerance,
) -> Result<usize> {
    let n = ic1.n();
    if ic2.n() != n {
        return Err(Error::input(format!(
            "conditions act on {} and {} edges",
            n,
            ic2.n()
        )));
    }
    let stacked = vstack(&ic1.block(), &ic2.block());
    let nullity = 2 * n - rank_tol(&stacked, tol)?;
    Ok(n - nullity)
}

/// Index sets of all coordinate planes of dimension `dim` in `Cⁿ`.
pub fn coordinate_planes(n: usize, dim: usize) -> Vec<Vec<usize>> {
    combinations(n, dim)
}

fn meets_trivially(l: &CMatrix, plane: &[usize], tol: RankTolerance) -> Result<bool> {
    if plane.is_empty() {
        return Ok(true);
    }
    let mut e = CMatrix::zeros(l.nrows(), plane.len());
    for (k, &i) in plane.iter().enumerate() {
        e[(i, k)] = c64(1.0, 0.0);
    }
    Ok(span_dim(&hstack(l, &e), tol)? == span_dim(l, tol)? + plane.len())
}

/// Enlarge `span(l)` by one dimension so that it meets none of the given
/// coordinate planes. The new direction is drawn at random from the
/// orthogonal complement of `l` and the result is re-verified.
pub fn extend_avoiding<R: rand::Rng + ?Sized>(
    l: &CMatrix,
    avoid: &[Vec<usize>],
    rng: &mut R,
    tol: RankTolerance,
) -> Result<CMatrix> {
    let n = l.nrows();
    let base = range_basis(l, tol)?;
    let d = base.ncols();
    if d >= n {
        return Err(Error::Precondition(format!(
            "subspace of dimension {d} cannot grow inside C^{n}"
        )));
    }
    for plane in avoid {
        if plane.iter().any(|&i| i >= n) {
            return Err(Error::input(format!("coordinate {plane:?} out of range")));
        }
        if plane.len() + d + 1 > n {
            return Err(Error::Precondition(format!(
                "coordinate plane {plane:?} too large to avoid"
            )));
        }
        if !meets_trivially(&base, plane, tol)? {
            return Err(Error::Precondition(format!(
                "subspace already meets coordinate plane {plane:?}"
            )));
        }
    }
    let complement = orth_complement(&base, tol)?;
    let k = complement.ncols();
    for _ in 0..MAX_ATTEMPTS {
        let coeffs = gaussian_matrix(k, 1, rng);
        let z = &complement * coeffs;
        let z = &z / c64(z.norm(), 0.0);
        let candidate = hstack(&base, &z);
        let mut ok = true;
        for plane in avoid {
            if !meets_trivially(&candidate, plane, tol)? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(candidate);
        }
    }
    Err(Error::Randomization {
        attempts: MAX_ATTEMPTS,
        reason: "every sampled direction met an avoided coordinate plane".into(),
    })
}

/// One step `rank B = k → k − 1` of the reduction.
fn reduce_once<R: rand::Rng + ?Sized>(
    ic: &InterfaceCondition,
    rng: &mut R,
    tol: RankTolerance,
) -> Result<InterfaceCondition> {
    let n = ic.n();
    let k = ic.rank_b();
    let j = j_matrix(n);
    let zeros = CMatrix::zeros(n, 0);

    let ker_b = if k == n {
        zeros.clone()
    } else {
        null_space(ic.b(), tol)?
    };
    let planes = coordinate_planes(n, k - 1);
    let l_ext = if ker_b.ncols() == 0 {
        // Start from the zero subspace: any unit vector avoiding the planes.
        let mut attempt = None;
        for _ in 0..MAX_ATTEMPTS {
            let z = gaussian_matrix(n, 1, rng);
            let z = &z / c64(z.norm(), 0.0);
            let mut ok = true;
            for p in &planes {
                if !p.is_empty() && !meets_trivially(&z, p, tol)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                attempt = Some(z);
                break;
            }
        }
        attempt.ok_or_else(|| Error::Randomization {
            attempts: MAX_ATTEMPTS,
            reason: "no direction avoiding the coordinate planes".into(),
        })?
    } else {
        extend_avoiding(&ker_b, &planes, rng, tol)?
    };

    let theta = lagrange_plane(ic, tol)?.basis;
    let pi = vstack(&CMatrix::zeros(n, l_ext.ncols()), &l_ext);
    let theta_cap_0 = vstack(&CMatrix::zeros(n, ker_b.ncols()), &ker_b);

    let s = hstack(&theta, &pi);
    let s_perp = null_space(&(&j * &s).adjoint(), tol)?;
    // Orthogonal complement of θ ∩ θ₀ inside S^[⊥].
    let pi_prime = if theta_cap_0.ncols() == 0 {
        s_perp
    } else {
        let proj = &s_perp.adjoint() * &theta_cap_0;
        let coords = orth_complement(&proj, tol)?;
        &s_perp * coords
    };
    if pi_prime.ncols() + pi.ncols() != n {
        return Err(Error::Inconsistency(format!(
            "reduced plane has dimension {} instead of {n}",
            pi_prime.ncols() + pi.ncols()
        )));
    }
    let plane = LagrangePlane::from_basis(&hstack(&pi_prime, &pi), tol)?;
    plane.to_interface(tol)
}

/// A condition `(A_k, B_k)` with `rank B_k = k` that still mixes all edges
/// and whose plane meets `θ_{A,B}` in codimension `r − k`.
pub fn reduce_rank(
    ic: &InterfaceCondition,
    k: usize,
    tol: RankTolerance,
    seed: u64,
) -> Result<InterfaceCondition> {
    let r = ic.rank_b();
    if r == 0 {
        return Err(Error::Precondition(
            "rank B = 0 leaves nothing to reduce".into(),
        ));
    }
    if k == 0 || k > r {
        return Err(Error::Precondition(format!(
            "need 1 <= k <= rank B = {r}, got k = {k}"
        )));
    }
    if !satisfies_d4(ic, tol)? {
        return Err(Error::D4Violation(
            "reduction starts from a mixing condition".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = ic.clone();
    while current.rank_b() > k {
        let target = current.rank_b() - 1;
        let mut last = None;
        for _ in 0..MAX_ATTEMPTS {
            match reduce_once(&current, &mut rng, tol) {
                Ok(next) if next.rank_b() == target && satisfies_d4(&next, tol)? => {
                    last = Some(Ok(next));
                    break;
                }
                Ok(next) => {
                    last = Some(Err(Error::D4Violation(format!(
                        "reduced pair has rank {} or does not mix edges",
                        next.rank_b()
                    ))))
                }
                Err(e @ Error::Randomization { .. }) => last = Some(Err(e)),
                Err(e) => return Err(e),
            }
        }
        current = last.expect("at least one attempt")?;
    }
    Ok(current)
}
