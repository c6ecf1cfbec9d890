//! The mixing condition: every `rank B` distinct columns of `B` are linearly
//! independent. Checked three independent ways, plus the minor criteria for
//! `B` already in block form `(0 0; B₁ I)`.

use crate::error::{Error, Result};
use crate::numeric::{
    all_minors_nonzero, c64, combinations, hstack, maximal_minors_nonzero, null_space, rank_tol,
    real_diag, select_columns, span_dim, CMatrix, RankTolerance, MAX_MINOR_DIM,
};

use super::InterfaceCondition;

/// Verdicts of the three equivalent formulations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct D4Criteria {
    /// Every set of `r` columns has rank `r`.
    pub columns: bool,
    /// `B` is injective on every coordinate plane of dimension `≤ r`.
    pub coordinate_planes: bool,
    /// `rank(B X B*) = min(rank X, r)` for every diagonal 0/1 projection `X`.
    pub gram_identity: bool,
}

impl D4Criteria {
    pub fn agree(&self) -> bool {
        self.columns == self.coordinate_planes && self.columns == self.gram_identity
    }
}

/// Evaluate all three criteria for `b` with given rank `r`.
pub fn d4_criteria(b: &CMatrix, r: usize, tol: RankTolerance) -> Result<D4Criteria> {
    let n = b.ncols();
    if n > MAX_MINOR_DIM {
        return Err(Error::input(format!(
            "D4 enumeration limited to n <= {MAX_MINOR_DIM}, got {n}"
        )));
    }
    if r == 0 {
        return Ok(D4Criteria {
            columns: true,
            coordinate_planes: true,
            gram_identity: true,
        });
    }

    let columns = combinations(n, r).iter().all(|cols| {
        span_dim(&select_columns(b, cols), tol)
            .map(|d| d == r)
            .unwrap_or(false)
    });

    let mut coordinate_planes = true;
    'outer: for size in 1..=r {
        for cols in combinations(n, size) {
            if null_space(&select_columns(b, &cols), tol)?.ncols() != 0 {
                coordinate_planes = false;
                break 'outer;
            }
        }
    }

    let mut gram_identity = true;
    for mask in 1u32..(1u32 << n) {
        let support: Vec<f64> = (0..n).map(|i| f64::from((mask >> i) & 1)).collect();
        let rank_x = mask.count_ones() as usize;
        let x = real_diag(&support);
        let g = b * x * b.adjoint();
        let rank_g = if g.iter().all(|z| *z == c64(0.0, 0.0)) {
            0
        } else {
            rank_tol(&g, tol)?
        };
        if rank_g != rank_x.min(r) {
            gram_identity = false;
            break;
        }
    }

    Ok(D4Criteria {
        columns,
        coordinate_planes,
        gram_identity,
    })
}

/// Whether the condition mixes all edges. The three formulations are
/// computed independently; disagreement means the tolerance is too loose or
/// too tight for this instance and is reported as an error.
pub fn satisfies_d4(ic: &InterfaceCondition, tol: RankTolerance) -> Result<bool> {
    let crit = d4_criteria(ic.b(), ic.rank_b(), tol)?;
    if !crit.agree() {
        return Err(Error::Inconsistency(format!(
            "D4 criteria disagree: {crit:?}"
        )));
    }
    Ok(crit.columns)
}

/// Equivalent criteria for `B = (0 0; B₁ I_r)` with `B₁ ∈ C^{r×(n−r)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinorCriteria {
    /// `B` satisfies the column-independence condition.
    pub d4: bool,
    /// All `r`-minors of `(B₁, I_r)` are nonzero.
    pub wide: bool,
    /// All `(n−r)`-minors of `(I_{n−r}, −B₁*)` are nonzero.
    pub dual: bool,
    /// All minors of `B₁` are nonzero.
    pub block: bool,
}

impl MinorCriteria {
    pub fn agree(&self) -> bool {
        self.d4 == self.wide && self.wide == self.dual && self.dual == self.block
    }
}

pub fn minor_criteria(b1: &CMatrix, tol: RankTolerance) -> Result<MinorCriteria> {
    let r = b1.nrows();
    let m = b1.ncols();
    let n = r + m;
    if r == 0 || m == 0 {
        return Err(Error::input("B1 must have at least one row and one column"));
    }
    let mut b = CMatrix::zeros(n, n);
    b.view_mut((m, 0), (r, m)).copy_from(b1);
    b.view_mut((m, m), (r, r))
        .copy_from(&CMatrix::identity(r, r));
    let crit = d4_criteria(&b, r, tol)?;
    if !crit.agree() {
        return Err(Error::Inconsistency(format!(
            "D4 criteria disagree: {crit:?}"
        )));
    }
    let wide = maximal_minors_nonzero(&hstack(b1, &CMatrix::identity(r, r)), tol)?;
    let dual = maximal_minors_nonzero(&hstack(&CMatrix::identity(m, m), &(-b1.adjoint())), tol)?;
    let block = all_minors_nonzero(b1, tol)?;
    Ok(MinorCriteria {
        d4: crit.columns,
        wide,
        dual,
        block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::validate;

    fn real(rows: usize, cols: usize, v: &[f64]) -> CMatrix {
        CMatrix::from_row_slice(
            rows,
            cols,
            &v.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>(),
        )
    }

    #[test]
    fn standard_satisfies_d4() {
        let st = InterfaceCondition::standard(3).unwrap();
        assert!(satisfies_d4(&st, RankTolerance::default()).unwrap());
    }

    #[test]
    fn split_matrix_fails_d4() {
        // Matrices from the discussion of non-mixing conditions.
        let a = real(3, 3, &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let b = real(3, 3, &[0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let ic = validate(a, b.clone(), RankTolerance::default()).unwrap();
        assert_eq!(ic.rank_b(), 2);
        assert!(!satisfies_d4(&ic, RankTolerance::default()).unwrap());
        let a2 = real(3, 3, &[1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let ic2 = validate(a2, b, RankTolerance::default()).unwrap();
        assert!(!satisfies_d4(&ic2, RankTolerance::default()).unwrap());
    }

    #[test]
    fn zero_b_is_vacuous() {
        let dec = InterfaceCondition::decoupled(4).unwrap();
        assert!(satisfies_d4(&dec, RankTolerance::default()).unwrap());
    }

    #[test]
    fn minor_criteria_on_standard_block() {
        let b1 = real(1, 2, &[1.0, 1.0]);
        let c = minor_criteria(&b1, RankTolerance::default()).unwrap();
        assert!(c.agree() && c.block);
        let planted = real(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let c = minor_criteria(&planted, RankTolerance::default()).unwrap();
        assert!(c.agree() && !c.block);
    }
}
