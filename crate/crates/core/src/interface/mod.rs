//! Interface conditions `A·u(0) + B·u'(0) = 0` at the star vertex.
//!
//! A pair `(A, B)` of `n×n` matrices is admissible when `AB* = BA*` and
//! `rank(A, B) = n`. The submodules provide the normal form used by the
//! multiplicity formulas, a J-unitary completion `(C, D)`, and the
//! Lagrange-plane geometry behind rank reduction.

mod completion;
mod d4;
mod normal_form;
mod plane;
pub mod random;

pub use completion::{complete_j_unitary, j_matrix, JUnitaryCompletion};
pub use d4::{d4_criteria, minor_criteria, satisfies_d4, D4Criteria, MinorCriteria};
pub use normal_form::{to_normal_form, NormalForm};
pub use plane::{
    coordinate_planes, coupling_codim, extend_avoiding, lagrange_plane, reduce_rank, LagrangePlane,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{c64, ensure_finite, hstack, singular_values, CMatrix, RankTolerance};

/// A validated self-adjoint interface condition.
#[derive(Clone, Debug)]
pub struct InterfaceCondition {
    a: CMatrix,
    b: CMatrix,
    rank_b: usize,
}

impl InterfaceCondition {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    /// `r = rank B`, the rank of the perturbation relative to the decoupled
    /// operator.
    pub fn rank_b(&self) -> usize {
        self.rank_b
    }

    /// Continuity at the vertex plus vanishing sum of derivatives.
    pub fn standard(n: usize) -> Result<Self> {
        check_n(n)?;
        let mut a = CMatrix::zeros(n, n);
        let mut b = CMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i)] = c64(1.0, 0.0);
            a[(i, n - 1)] = c64(-1.0, 0.0);
        }
        for j in 0..n {
            b[(n - 1, j)] = c64(1.0, 0.0);
        }
        validate(a, b, RankTolerance::default())
    }

    /// `A = I, B = 0`: Dirichlet condition on every edge.
    pub fn decoupled(n: usize) -> Result<Self> {
        check_n(n)?;
        validate(
            CMatrix::identity(n, n),
            CMatrix::zeros(n, n),
            RankTolerance::default(),
        )
    }

    /// `A = 0, B = I`: Neumann condition on every edge.
    pub fn antidecoupled(n: usize) -> Result<Self> {
        check_n(n)?;
        validate(
            CMatrix::zeros(n, n),
            CMatrix::identity(n, n),
            RankTolerance::default(),
        )
    }

    pub fn preset(name: &str, n: usize) -> Result<Self> {
        match name {
            "standard" => Self::standard(n),
            "decoupled" => Self::decoupled(n),
            "antidecoupled" => Self::antidecoupled(n),
            other => Err(Error::input(format!(
                "unknown preset '{other}' (expected standard, decoupled or antidecoupled)"
            ))),
        }
    }

    /// `(Q·A·P, Q·B·P)`: same operator up to renumbering the edges by `P`.
    pub fn transformed(&self, q: &CMatrix, p: &CMatrix, tol: RankTolerance) -> Result<Self> {
        validate(q * &self.a * p, q * &self.b * p, tol)
    }

    /// The `n × 2n` block `(A, B)`.
    pub fn block(&self) -> CMatrix {
        hstack(&self.a, &self.b)
    }

    pub fn from_json_str(s: &str, tol: RankTolerance) -> Result<Self> {
        let raw: InterfaceJson = serde_json::from_str(s)?;
        raw.into_condition(tol)
    }

    pub fn to_json(&self) -> InterfaceJson {
        InterfaceJson {
            n: self.n(),
            a: matrix_to_rows(&self.a),
            b: matrix_to_rows(&self.b),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::input("interface condition needs at least one edge"))
    } else {
        Ok(())
    }
}

/// Relative residual `‖AB* − BA*‖ / (‖A‖² + ‖B‖²)`.
pub fn self_adjointness_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.norm_squared() + b.norm_squared();
    let res = (a * b.adjoint() - b * a.adjoint()).norm();
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

/// Check `AB* = BA*` and `rank(A, B) = n`, caching `rank B`.
pub fn validate(a: CMatrix, b: CMatrix, tol: RankTolerance) -> Result<InterfaceCondition> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.shape() != (n, n) {
        return Err(Error::input(format!(
            "A and B must be square of equal size, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    ensure_finite(&a)?;
    ensure_finite(&b)?;
    let residual = self_adjointness_residual(&a, &b);
    if residual > tol.value() {
        return Err(Error::D3Violation {
            reason: "AB* != BA*".into(),
            residual,
        });
    }
    let block_sv = singular_values(&hstack(&a, &b));
    let full = block_sv
        .iter()
        .filter(|&&s| s > tol.value() * block_sv[0])
        .count();
    if full != n {
        return Err(Error::D3Violation {
            reason: format!("rank(A, B) = {full} < {n}"),
            residual: (n - full) as f64,
        });
    }
    // Measured against the scale of (A, B) so that round-off in a vanishing
    // B is not mistaken for rank.
    let rank_b = singular_values(&b)
        .iter()
        .filter(|&&s| s > tol.value() * block_sv[0])
        .count();
    Ok(InterfaceCondition { a, b, rank_b })
}

/// Wire format: `{"n": 3, "A": [[[re, im], ...], ...], "B": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InterfaceJson {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<[f64; 2]>>,
}

impl InterfaceJson {
    pub fn into_condition(self, tol: RankTolerance) -> Result<InterfaceCondition> {
        let a = rows_to_matrix(&self.a, self.n, "A")?;
        let b = rows_to_matrix(&self.b, self.n, "B")?;
        validate(a, b, tol)
    }
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>], n: usize, name: &str) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::input(format!("{name} must be {n}x{n}")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        c64(rows[i][j][0], rows[i][j][1])
    }))
}

pub(crate) fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}
