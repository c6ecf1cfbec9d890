use crate::error::{Error, Result};
use crate::numeric::{c64, hstack, inverse_condition, vstack, CMatrix};

use super::InterfaceCondition;

/// `J = i·(0 I; −I 0)` on `C^n × C^n`.
pub fn j_matrix(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = c64(0.0, 1.0);
        j[(n + k, k)] = c64(0.0, -1.0);
    }
    j
}

/// `w = (A B; C D)` with `w*Jw = J`.
#[derive(Clone, Debug)]
pub struct JUnitaryCompletion {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

impl JUnitaryCompletion {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn w(&self) -> CMatrix {
        vstack(&hstack(&self.a, &self.b), &hstack(&self.c, &self.d))
    }

    /// `(‖w*Jw − J‖_F, ‖wJw* − J‖_F)`.
    pub fn residuals(&self) -> (f64, f64) {
        let w = self.w();
        let j = j_matrix(self.n());
        (
            (w.adjoint() * &j * &w - &j).norm(),
            (&w * &j * w.adjoint() - &j).norm(),
        )
    }

    /// Residuals of `BA*−AB* = 0`, `DA*−CB* = I`, `BC*−AD* = −I`, `DC*−CD* = 0`.
    pub fn relation_residuals(&self) -> [f64; 4] {
        let (a, b, c, d) = (&self.a, &self.b, &self.c, &self.d);
        let id = CMatrix::identity(self.n(), self.n());
        [
            (b * a.adjoint() - a * b.adjoint()).norm(),
            (d * a.adjoint() - c * b.adjoint() - &id).norm(),
            (b * c.adjoint() - a * d.adjoint() + &id).norm(),
            (d * c.adjoint() - c * d.adjoint()).norm(),
        ]
    }
}

/// `C = −X⁻¹B`, `D = X⁻¹A` with `X = AA* + BB*`.
pub fn complete_j_unitary(ic: &InterfaceCondition) -> Result<JUnitaryCompletion> {
    let a = ic.a();
    let b = ic.b();
    let x = a * a.adjoint() + b * b.adjoint();
    let rcond = inverse_condition(&x);
    if rcond < 1e-12 {
        return Err(Error::Conditioning(format!(
            "AA* + BB* has inverse condition {rcond:.3e}; (A, B) is close to rank deficient"
        )));
    }
    let chol = x
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Conditioning("AA* + BB* is not positive definite".into()))?;
    Ok(JUnitaryCompletion {
        a: a.clone(),
        b: b.clone(),
        c: -chol.solve(b),
        d: chol.solve(a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::random::random_interface;
    use crate::numeric::RankTolerance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decoupled_and_antidecoupled() {
        let w = complete_j_unitary(&InterfaceCondition::decoupled(3).unwrap()).unwrap();
        assert!(w.c.norm() < 1e-15);
        assert!((&w.d - CMatrix::identity(3, 3)).norm() < 1e-15);
        let w = complete_j_unitary(&InterfaceCondition::antidecoupled(3).unwrap()).unwrap();
        assert!((&w.c + CMatrix::identity(3, 3)).norm() < 1e-15);
        assert!(w.d.norm() < 1e-15);
    }

    #[test]
    fn standard_two_edges() {
        let ic = InterfaceCondition::standard(2).unwrap();
        let w = complete_j_unitary(&ic).unwrap();
        // X = diag(2, 2).
        assert!((&w.c + ic.b() * c64(0.5, 0.0)).norm() < 1e-14);
        assert!((&w.d - ic.a() * c64(0.5, 0.0)).norm() < 1e-14);
        let (r1, r2) = w.residuals();
        assert!(r1 < 1e-14 && r2 < 1e-14);
        assert!(w.relation_residuals().iter().all(|&r| r < 1e-14));
    }

    #[test]
    fn random_pairs_are_completed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            for r in 0..=n {
                let ic = random_interface(n, r, &mut rng, RankTolerance::default()).unwrap();
                let (r1, r2) = complete_j_unitary(&ic).unwrap().residuals();
                assert!(r1 < 1e-10 && r2 < 1e-10, "n={n} r={r}: {r1:e} {r2:e}");
            }
        }
    }
}
