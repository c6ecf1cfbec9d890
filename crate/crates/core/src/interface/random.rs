//! Seeded random generators for interface conditions and test matrices.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::{c64, diag, inverse_condition, CMatrix, RankTolerance};

use super::{satisfies_d4, validate, InterfaceCondition};

const MAX_ATTEMPTS: usize = 64;

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (q, r) = qr.unpack();
    let phases: Vec<Complex64> = (0..n)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c64(1.0, 0.0)
            }
        })
        .collect();
    q * diag(&phases)
}

/// Gaussian matrix with inverse condition number at least `1e-3`.
pub fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let q = gaussian_matrix(n, n, rng);
        if inverse_condition(&q) > 1e-3 {
            return q;
        }
    }
}

pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Random self-adjoint condition with `rank B = r`, satisfying the mixing
/// condition. Built as `A = U − I`, `B = i(U + I)` from a unitary `U` with
/// exactly `n − r` eigenvalues at `−1`, then mixed by a random invertible `Q`.
pub fn random_interface<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    rng: &mut R,
    tol: RankTolerance,
) -> Result<InterfaceCondition> {
    if n == 0 || r > n {
        return Err(Error::input(format!(
            "need 0 <= r <= n, n >= 1 (n={n}, r={r})"
        )));
    }
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        let v = random_unitary(n, rng);
        let eig: Vec<Complex64> = (0..n)
            .map(|k| {
                if k < r {
                    // Keep e^{iφ} away from −1 so B has a clear rank gap.
                    let phi = rng.random_range(-2.0..2.0);
                    Complex64::from_polar(1.0, phi)
                } else {
                    c64(-1.0, 0.0)
                }
            })
            .collect();
        let u = &v * diag(&eig) * v.adjoint();
        let id = CMatrix::identity(n, n);
        let q = random_invertible(n, rng);
        let a = &q * (&u - &id);
        let b = &q * ((&u + &id) * c64(0.0, 1.0));
        match validate(a, b, tol) {
            Ok(ic) if ic.rank_b() == r => {
                if n > crate::numeric::MAX_MINOR_DIM || satisfies_d4(&ic, tol)? {
                    return Ok(ic);
                }
                last = "mixing condition failed".into();
            }
            Ok(ic) => last = format!("rank B came out as {}", ic.rank_b()),
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::Randomization {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

/// Random rank `r ∈ {0, …, n}` followed by [`random_interface`].
pub fn random_interface_any_rank<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    tol: RankTolerance,
) -> Result<InterfaceCondition> {
    let r = rng.random_range(0..=n);
    random_interface(n, r, rng, tol)
}

/// Diagonal positive semidefinite matrix of size `k` with exactly `rank`
/// positive entries at random positions.
pub fn random_psd_diagonal<R: Rng + ?Sized>(k: usize, rank: usize, rng: &mut R) -> CMatrix {
    let positions = random_permutation(k, rng);
    let mut values = vec![0.0; k];
    for &p in positions.iter().take(rank) {
        values[p] = rng.random_range(0.1..2.0);
    }
    crate::numeric::real_diag(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(5, &mut rng);
        assert!((u.adjoint() * &u - CMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn interface_has_requested_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=5 {
            for r in 0..=n {
                let ic = random_interface(n, r, &mut rng, RankTolerance::default()).unwrap();
                assert_eq!(ic.rank_b(), r);
            }
        }
    }

    #[test]
    fn permutation_is_bijective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = random_permutation(7, &mut rng);
        p.sort_unstable();
        assert_eq!(p, (0..7).collect::<Vec<_>>());
    }
}
