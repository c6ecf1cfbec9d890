//! The coupled Weyl function `M_w(z) = (C + D·M₀(z))(A + B·M₀(z))⁻¹`.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interface::{
    complete_j_unitary, satisfies_d4, to_normal_form, InterfaceCondition, JUnitaryCompletion,
    NormalForm,
};
use crate::numeric::{
    diag, imag_part, inverse_condition, invert, CMatrix, RankTolerance, MAX_MINOR_DIM,
};
use crate::weyl::{eval_m0, StarGraph, WeylSample};

/// Paths (a) and (b) must agree to this relative tolerance.
const PATH_TOL: f64 = 1e-8;
/// Condition number of `A + B·M₀(z)` beyond which a warning is attached.
const CONDITION_WARNING: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct CoupledSample {
    pub z: Complex64,
    pub m0: WeylSample,
    pub mw: CMatrix,
    /// `D(z)`, present when a normal form is attached.
    pub d_schur: Option<CMatrix>,
    /// `Im M_w` from the congruence formula.
    pub im_mw: CMatrix,
    pub trace_im: f64,
    /// Condition number of `A + B·M₀(z)`.
    pub condition: f64,
    pub warning: Option<String>,
}

/// A graph together with an interface condition, checked for
/// `#non-artificial edges ≥ rank B`.
#[derive(Clone, Debug)]
pub struct Coupling {
    graph: StarGraph,
    ic: InterfaceCondition,
    completion: JUnitaryCompletion,
    normal_form: Option<NormalForm>,
}

impl Coupling {
    pub fn new(graph: StarGraph, ic: InterfaceCondition, tol: RankTolerance) -> Result<Self> {
        if graph.n() != ic.n() {
            return Err(Error::input(format!(
                "graph has {} edges but the interface condition acts on {}",
                graph.n(),
                ic.n()
            )));
        }
        let genuine = graph.non_artificial_count();
        if genuine < ic.rank_b() {
            return Err(Error::D5Violation {
                non_artificial: genuine,
                rank: ic.rank_b(),
            });
        }
        let completion = complete_j_unitary(&ic)?;
        let normal_form = if ic.n() <= MAX_MINOR_DIM && satisfies_d4(&ic, tol)? {
            Some(to_normal_form(&ic, tol)?)
        } else {
            None
        };
        Ok(Coupling {
            graph,
            ic,
            completion,
            normal_form,
        })
    }

    pub fn graph(&self) -> &StarGraph {
        &self.graph
    }

    pub fn interface(&self) -> &InterfaceCondition {
        &self.ic
    }

    pub fn completion(&self) -> &JUnitaryCompletion {
        &self.completion
    }

    pub fn normal_form(&self) -> Option<&NormalForm> {
        self.normal_form.as_ref()
    }

    pub fn eval(&self, z: Complex64) -> Result<CoupledSample> {
        let m0s = eval_m0(&self.graph, z)?;
        self.eval_with(m0s)
    }

    /// Evaluate from precomputed edge values.
    pub fn eval_with(&self, m0s: WeylSample) -> Result<CoupledSample> {
        let z = m0s.z;
        let m0 = m0s.m0();
        let w = &self.completion;
        let x = &w.a + &w.b * &m0;
        let rcond = inverse_condition(&x);
        if rcond < 1e-15 {
            return Err(Error::Invertibility(format!(
                "A + B·M0(z) is singular at z = {z}; check that enough edges are non-artificial"
            )));
        }
        let condition = 1.0 / rcond;
        let warning = (condition > CONDITION_WARNING)
            .then(|| format!("A + B·M0(z) has condition number {condition:.3e}"));
        let x_inv = invert(&x, "A + B·M0(z)")?;
        let numer = &w.c + &w.d * &m0;
        let mw = &numer * &x_inv;

        let im_mw = x_inv.adjoint() * imag_part(&m0) * &x_inv;
        let scale = 1.0 + mw.norm();
        let im_direct = imag_part(&mw);
        let im_gap = (&im_direct - &im_mw).norm();
        if im_gap > PATH_TOL * scale {
            return Err(Error::Inconsistency(format!(
                "Im M_w from the congruence formula differs by {im_gap:.3e}"
            )));
        }

        let d_schur = match &self.normal_form {
            Some(nf) => {
                let d = eval_d_schur(nf, &m0s)?;
                let x_inv_b = schur_inverse(nf, &m0s, &d)?;
                let mw_b = &numer * x_inv_b;
                let gap = (&mw_b - &mw).norm();
                if gap > PATH_TOL * scale {
                    return Err(Error::Inconsistency(format!(
                        "direct and Schur evaluations of M_w differ by {gap:.3e} at z = {z}"
                    )));
                }
                Some(d)
            }
            None => None,
        };

        let trace_im = (0..im_mw.nrows()).map(|i| im_mw[(i, i)].re).sum();
        Ok(CoupledSample {
            z,
            m0: m0s,
            mw,
            d_schur,
            im_mw,
            trace_im,
            condition,
            warning,
        })
    }
}

/// One-shot evaluation of `M_w(z)`.
pub fn eval_mw(
    graph: &StarGraph,
    ic: &InterfaceCondition,
    z: Complex64,
    tol: RankTolerance,
) -> Result<CoupledSample> {
    Coupling::new(graph.clone(), ic.clone(), tol)?.eval(z)
}

/// Diagonal blocks `M₁₁`, `M₂₂` of `M₀` in normal-form coordinates.
fn split_m0(nf: &NormalForm, m0: &WeylSample) -> (Vec<Complex64>, Vec<Complex64>) {
    let permuted = nf.permute(&m0.m);
    let split = nf.n - nf.r;
    (permuted[..split].to_vec(), permuted[split..].to_vec())
}

/// `D(z) = A₂ + M₂₂(z) + A₁*·M₁₁(z)·A₁`.
pub fn eval_d_schur(nf: &NormalForm, m0: &WeylSample) -> Result<CMatrix> {
    if m0.m.len() != nf.n {
        return Err(Error::input("sample size does not match the normal form"));
    }
    let (m11, m22) = split_m0(nf, m0);
    let d = &nf.a2 + diag(&m22) + nf.a1.adjoint() * diag(&m11) * &nf.a1;
    if nf.r > 0 && inverse_condition(&d) < 1e-14 {
        let im_rank = |v: &[Complex64]| v.iter().filter(|m| m.im.abs() > 1e-12).count();
        return Err(Error::Invertibility(format!(
            "D(z) is singular: rank Im M11 = {}, rank Im M22 = {}, r = {}",
            im_rank(&m11),
            im_rank(&m22),
            nf.r
        )));
    }
    Ok(d)
}

/// `(A + B·M₀)⁻¹ = P·(A' + B'·M₀')⁻¹·Q` with the block inverse
/// `(I − A₁D⁻¹A₁*M₁₁, −A₁D⁻¹; D⁻¹A₁*M₁₁, D⁻¹)`.
fn schur_inverse(nf: &NormalForm, m0: &WeylSample, d: &CMatrix) -> Result<CMatrix> {
    let (n, r) = (nf.n, nf.r);
    let k = n - r;
    let mut inv = CMatrix::identity(n, n);
    if r > 0 {
        let (m11, _) = split_m0(nf, m0);
        let d_inv = invert(d, "D(z)")?;
        let left = nf.a1.adjoint() * diag(&m11);
        let tl = CMatrix::identity(k, k) - &nf.a1 * &d_inv * &left;
        let tr = -(&nf.a1 * &d_inv);
        let bl = &d_inv * &left;
        inv.view_mut((0, 0), (k, k)).copy_from(&tl);
        inv.view_mut((0, k), (k, r)).copy_from(&tr);
        inv.view_mut((k, 0), (r, k)).copy_from(&bl);
        inv.view_mut((k, k), (r, r)).copy_from(&d_inv);
    }
    Ok(&nf.p * inv * &nf.q)
}

/// CSV rows `z_re, z_im, Mw (row-major, re/im interleaved), trace_im`.
pub fn write_samples_csv<W: Write>(out: &mut W, samples: &[CoupledSample]) -> Result<()> {
    let n = samples.first().map_or(0, |s| s.mw.nrows());
    let mut header = vec!["z_re".to_string(), "z_im".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("mw_{i}_{j}_re"));
            header.push(format!("mw_{i}_{j}_im"));
        }
    }
    header.push("trace_im".into());
    writeln!(out, "{}", header.join(","))?;
    for s in samples {
        let mut row = vec![s.z.re.to_string(), s.z.im.to_string()];
        for i in 0..n {
            for j in 0..n {
                row.push(s.mw[(i, j)].re.to_string());
                row.push(s.mw[(i, j)].im.to_string());
            }
        }
        row.push(s.trace_im.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
