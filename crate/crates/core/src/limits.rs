//! Boundary limits `z = x + iε → x` of Weyl-function ratios and the local
//! multiplicity estimates derived from them.

use std::io::Write;

use serde_json::json;

use crate::coupling::{CoupledSample, Coupling};
use crate::error::{Error, Result};
use crate::interface::{matrix_to_rows, InterfaceCondition, NormalForm};
use crate::numeric::{c64, diag, imag_part, invert, rank_tol, real_diag, CMatrix, RankTolerance};
use crate::weyl::{eval_m0, fit_slope, StarGraph, WeylSample};

/// Relative rank threshold for limit matrices, which carry `O(ε)` residue.
pub const LIMIT_RANK_TOL: f64 = 1e-4;
/// Default Frobenius tolerance for declaring a sequence of iterates stable.
pub const STABILITY_TOL: f64 = 1e-3;
/// Growth exponent of `Im tr` below which `x` is treated as a singular point.
pub const SINGULAR_EXPONENT: f64 = -0.5;
/// Growth exponent above which `x` is treated as outside the spectrum.
pub const OUTSIDE_EXPONENT: f64 = 0.5;

fn limit_tol() -> RankTolerance {
    RankTolerance::new(LIMIT_RANK_TOL).expect("constant lies in (0, 1)")
}

/// Decreasing heights `ε` for the vertical approach to the real axis.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsSchedule {
    eps: Vec<f64>,
    window: usize,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            eps: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            window: 3,
        }
    }
}

impl EpsSchedule {
    pub fn new(eps: Vec<f64>, window: usize) -> Result<Self> {
        if eps.len() < 2 {
            return Err(Error::input("need at least two ε values"));
        }
        if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) || eps.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::input(
                "ε values must be positive and strictly decreasing",
            ));
        }
        if window < 2 || window > eps.len() {
            return Err(Error::input(format!(
                "stability window must lie in [2, {}], got {window}",
                eps.len()
            )));
        }
        Ok(EpsSchedule { eps, window })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn smallest(&self) -> f64 {
        self.eps[self.eps.len() - 1]
    }
}

/// Position of `N₀(x)` relative to `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `N₀ > r`.
    ManyLayers,
    /// `N₀ = r`.
    Critical,
    /// `0 < N₀ < r`.
    FewLayers,
    /// `N₀ = 0`: `x` lies outside the spectrum of the decoupled operator.
    Empty,
}

impl Regime {
    pub fn classify(n0: usize, r: usize) -> Self {
        if n0 == 0 {
            Regime::Empty
        } else if n0 > r {
            Regime::ManyLayers
        } else if n0 == r {
            Regime::Critical
        } else {
            Regime::FewLayers
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::ManyLayers => "N0>r",
            Regime::Critical => "N0=r",
            Regime::FewLayers => "0<N0<r",
            Regime::Empty => "N0=0",
        }
    }
}

/// How `x` looks from the growth of `Im tr M(x + iε)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    /// `Im tr M` blows up: a point mass sits at `x`.
    Singular,
    /// `Im tr M` stays bounded and positive.
    Continuous,
    /// `Im tr M → 0`.
    Outside,
}

impl PointKind {
    pub fn from_exponent(e: f64) -> Self {
        if e < SINGULAR_EXPONENT {
            PointKind::Singular
        } else if e > OUTSIDE_EXPONENT {
            PointKind::Outside
        } else {
            PointKind::Continuous
        }
    }
}

/// `α(x) = lim Im M₀/Im tr M₀` and the quantities derived from it.
#[derive(Clone, Debug)]
pub struct LimitSample {
    pub x: f64,
    /// Ratio at the smallest `ε`.
    pub alpha: CMatrix,
    pub alpha_rank: usize,
    pub stable: bool,
    /// Slope of `log Im tr M₀(x + iε)` against `log ε`.
    pub growth_exponent: f64,
    /// Largest deviation of the ratio's trace from 1 over the schedule.
    pub trace_defect: f64,
    /// `H(x)` in normal-form coordinates.
    pub h: Option<CMatrix>,
    /// Predicted `lim Im M_w/Im tr M₀`, normal-form coordinates.
    pub predicted_limit: Option<CMatrix>,
    pub predicted_rank: Option<usize>,
    pub nab: Option<NabEstimate>,
    pub regime: Option<Regime>,
    /// Theorem-consistency violation, if any.
    pub violation: Option<String>,
}

impl LimitSample {
    pub fn kind(&self) -> PointKind {
        PointKind::from_exponent(self.growth_exponent)
    }

    /// `N₀(x)` as read off the limit: 0 outside the spectrum, `rank α` otherwise.
    pub fn n0(&self) -> usize {
        if self.kind() == PointKind::Outside {
            0
        } else {
            self.alpha_rank
        }
    }
}

/// Comparison of the directly observed limit with the block formula.
#[derive(Clone, Debug)]
pub struct LimitPrediction {
    pub predicted: CMatrix,
    pub predicted_rank: usize,
    /// `Im M_w'/Im tr M₀` for the normal-form pair at the smallest `ε`.
    pub observed: CMatrix,
    /// Frobenius distance between the two.
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct NabEstimate {
    pub x: f64,
    /// Estimated `N_{A,B}(x)`; 0 when `x` is outside the spectrum.
    pub nab: usize,
    pub in_spectrum: bool,
    pub stable: bool,
    /// Slope of `log Im tr M_w(x + iε)`.
    pub growth_exponent: f64,
    /// `Im M_w/Im tr M_w` at the smallest `ε`.
    pub ratio_w: CMatrix,
    /// `Im M_w/Im tr M₀` at the smallest `ε`.
    pub ratio_over_m: CMatrix,
    pub prediction: Option<LimitPrediction>,
    pub warnings: Vec<String>,
}

fn is_stable(iterates: &[CMatrix], window: usize, tol: f64) -> bool {
    let tail = &iterates[iterates.len() - window..];
    tail.windows(2).all(|w| (&w[1] - &w[0]).norm() < tol)
}

fn growth(eps: &[f64], values: &[f64]) -> f64 {
    if values.iter().any(|&v| v <= 0.0) {
        // Vanishing imaginary part: treat as decaying faster than any power.
        return f64::INFINITY;
    }
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    fit_slope(&lx, &ly)
}

fn sample_m0(graph: &StarGraph, x: f64, sched: &EpsSchedule) -> Result<Vec<WeylSample>> {
    sched
        .eps()
        .iter()
        .map(|&e| eval_m0(graph, c64(x, e)))
        .collect()
}

fn alpha_from_samples(
    x: f64,
    samples: &[WeylSample],
    sched: &EpsSchedule,
    tol: f64,
) -> Result<LimitSample> {
    let mut ratios = Vec::with_capacity(samples.len());
    let mut traces = Vec::with_capacity(samples.len());
    let mut trace_defect: f64 = 0.0;
    for s in samples {
        let t = s.im_trace();
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Degenerate(format!(
                "Im tr M0({}) = {t} leaves the ratio undefined",
                s.z
            )));
        }
        let ratio = real_diag(&s.m.iter().map(|m| m.im / t).collect::<Vec<_>>());
        trace_defect = trace_defect.max((ratio.trace().re - 1.0).abs());
        ratios.push(ratio);
        traces.push(t);
    }
    let alpha = ratios.last().expect("schedule is nonempty").clone();
    Ok(LimitSample {
        x,
        alpha_rank: rank_tol(&alpha, limit_tol())?,
        alpha,
        stable: is_stable(&ratios, sched.window(), tol),
        growth_exponent: growth(sched.eps(), &traces),
        trace_defect,
        h: None,
        predicted_limit: None,
        predicted_rank: None,
        nab: None,
        regime: None,
        violation: None,
    })
}

/// Estimate `α(x)` along the schedule.
pub fn estimate_alpha(
    graph: &StarGraph,
    x: f64,
    sched: &EpsSchedule,
    tol: f64,
) -> Result<LimitSample> {
    let samples = sample_m0(graph, x, sched)?;
    alpha_from_samples(x, &samples, sched, tol)
}

/// `rank(X₁ − X₁B₁*(B₁X₁B₁* + X₂)⁻¹B₁X₁)` against `rank X₁ + rank X₂ − r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchurRankIdentity {
    pub observed: usize,
    pub expected: usize,
}

/// The Schur-complement matrix `X₁ − X₁B₁*(B₁X₁B₁* + X₂)⁻¹B₁X₁` together
/// with `B₁X₁B₁* + X₂`.
fn schur_limit(b1: &CMatrix, x1: &CMatrix, x2: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let g = b1 * x1 * b1.adjoint() + x2;
    let g_inv = invert(&g, "B1·X1·B1* + X2")?;
    let k = x1 - x1 * b1.adjoint() * g_inv * b1 * x1;
    Ok((k, g))
}

/// Rank identity for `B₁ ∈ C^{r×m}` with all minors nonzero and positive
/// semidefinite `X₁`, `X₂` with `rank X₁ + rank X₂ ≥ r`.
pub fn schur_rank_identity(
    b1: &CMatrix,
    x1: &CMatrix,
    x2: &CMatrix,
    tol: RankTolerance,
) -> Result<SchurRankIdentity> {
    let r = b1.nrows();
    let m = b1.ncols();
    if x1.shape() != (m, m) || x2.shape() != (r, r) {
        return Err(Error::input(
            "X1 must be m×m and X2 r×r for B1 of shape r×m",
        ));
    }
    let rank = |a: &CMatrix| -> Result<usize> {
        if a.nrows() == 0 || a.iter().all(|v| *v == c64(0.0, 0.0)) {
            Ok(0)
        } else {
            rank_tol(a, tol)
        }
    };
    let total = rank(x1)? + rank(x2)?;
    if total < r {
        return Err(Error::Precondition(format!(
            "rank X1 + rank X2 = {total} < r = {r}"
        )));
    }
    let (k, _) = schur_limit(b1, x1, x2)?;
    // Measure K against the scale of X₁ so a vanishing K has rank 0.
    let scale = x1.norm().max(f64::MIN_POSITIVE);
    let sv = crate::numeric::singular_values(&k);
    let observed = sv.iter().filter(|&&s| s > tol.value() * scale).count();
    Ok(SchurRankIdentity {
        observed,
        expected: total - r,
    })
}

/// `α` in normal-form coordinates: `Pᵀ·α·P`.
fn permuted(nf: &NormalForm, m: &CMatrix) -> CMatrix {
    nf.p.transpose() * m * &nf.p
}

/// Predicted `lim Im M_w/Im tr M₀` in normal-form coordinates and its rank.
/// Also returns `H(x)` when it is defined.
pub fn lemma9_predict(
    nf: &NormalForm,
    sample: &LimitSample,
) -> Result<(CMatrix, usize, Option<CMatrix>)> {
    let (n, r) = (nf.n, nf.r);
    if sample.alpha.shape() != (n, n) {
        return Err(Error::input("α has the wrong size for this normal form"));
    }
    let alpha = permuted(nf, &sample.alpha);
    let zero = CMatrix::zeros(n, n);
    if r == 0 {
        return Ok((alpha, sample.alpha_rank, None));
    }
    if r == n {
        // (A + B·M₀)⁻¹ → 0, so the ratio vanishes.
        return Ok((zero, 0, None));
    }
    if sample.alpha_rank < r {
        return Err(Error::Precondition(format!(
            "rank α = {} < r = {r}",
            sample.alpha_rank
        )));
    }
    let m = n - r;
    let a11 = alpha.view((0, 0), (m, m)).into_owned();
    let a22 = alpha.view((m, m), (r, r)).into_owned();
    let h = &a22 + nf.a1.adjoint() * &a11 * &nf.a1;
    if sample.alpha_rank == r {
        return Ok((zero, 0, Some(h)));
    }
    let (k, _) = schur_limit(&nf.a1.adjoint(), &a11, &a22).map_err(|_| {
        Error::Inconsistency(format!(
            "H(x) is singular although rank α = {} > r = {r}",
            sample.alpha_rank
        ))
    })?;
    let mut limit = zero;
    limit.view_mut((0, 0), (m, m)).copy_from(&k);
    let rank = rank_tol(&limit, limit_tol())?;
    Ok((limit, rank, Some(h)))
}

/// `Im M_w'` for the normal-form pair, from `M₀` in original numbering.
fn im_mw_normal_form(nf: &NormalForm, m0: &WeylSample) -> Result<CMatrix> {
    let (a, b) = nf.reassembled();
    let m0p = diag(&nf.permute(&m0.m));
    let x_inv = invert(&(&a + &b * &m0p), "A' + B'·M0'")?;
    Ok(x_inv.adjoint() * imag_part(&m0p) * x_inv)
}

fn run_point(
    coupling: &Coupling,
    x: f64,
    sched: &EpsSchedule,
    tol: f64,
) -> Result<(LimitSample, NabEstimate)> {
    let m0s = sample_m0(coupling.graph(), x, sched)?;
    let mut alpha = alpha_from_samples(x, &m0s, sched, tol)?;
    let coupled: Vec<CoupledSample> = m0s
        .iter()
        .map(|s| coupling.eval_with(s.clone()))
        .collect::<Result<_>>()?;
    let warnings: Vec<String> = coupled.iter().filter_map(|s| s.warning.clone()).collect();

    let traces: Vec<f64> = coupled.iter().map(|s| s.trace_im).collect();
    let growth_exponent = growth(sched.eps(), &traces);
    let in_spectrum = growth_exponent <= OUTSIDE_EXPONENT;
    let ratios: Vec<CMatrix> = coupled
        .iter()
        .map(|s| &s.im_mw / c64(s.trace_im.max(f64::MIN_POSITIVE), 0.0))
        .collect();
    let last = coupled.last().expect("schedule is nonempty");
    let ratio_w = ratios.last().expect("schedule is nonempty").clone();
    let ratio_over_m = &last.im_mw / c64(last.m0.im_trace(), 0.0);
    let stable = is_stable(&ratios, sched.window(), tol);
    let nab = if in_spectrum {
        rank_tol(&ratio_w, limit_tol())?
    } else {
        0
    };

    let mut prediction = None;
    if let Some(nf) = coupling.normal_form() {
        if let Ok((predicted, predicted_rank, h)) = lemma9_predict(nf, &alpha) {
            alpha.h = h;
            alpha.predicted_limit = Some(predicted.clone());
            alpha.predicted_rank = Some(predicted_rank);
            let last_m0 = m0s.last().expect("schedule is nonempty");
            let observed = im_mw_normal_form(nf, last_m0)? / c64(last_m0.im_trace(), 0.0);
            let gap = (&observed - &predicted).norm();
            prediction = Some(LimitPrediction {
                predicted,
                predicted_rank,
                observed,
                gap,
            });
        }
    }

    let est = NabEstimate {
        x,
        nab,
        in_spectrum,
        stable,
        growth_exponent,
        ratio_w,
        ratio_over_m,
        prediction,
        warnings,
    };
    Ok((alpha, est))
}

/// Estimate `N_{A,B}(x) = rank lim Im M_w/Im tr M_w`.
pub fn estimate_nab(
    graph: &StarGraph,
    ic: &InterfaceCondition,
    x: f64,
    sched: &EpsSchedule,
    tol: f64,
) -> Result<NabEstimate> {
    let coupling = Coupling::new(graph.clone(), ic.clone(), RankTolerance::default())?;
    Ok(run_point(&coupling, x, sched, tol)?.1)
}

/// Integer consistency checks between `N₀`, `r` and the estimated `N_{A,B}`.
fn check_point(sample: &LimitSample, nab: usize, r: usize) -> Option<String> {
    let n0 = sample.n0();
    match sample.kind() {
        PointKind::Singular => match Regime::classify(n0, r) {
            Regime::ManyLayers if nab != n0 - r => Some(format!(
                "N0 = {n0} > r = {r} but N_AB = {nab} != {}",
                n0 - r
            )),
            Regime::Critical if nab != 0 => Some(format!("N0 = r = {r} but N_AB = {nab} != 0")),
            Regime::FewLayers if nab > r - n0 => Some(format!(
                "0 < N0 = {n0} < r = {r} but N_AB = {nab} > {}",
                r - n0
            )),
            _ => None,
        },
        PointKind::Continuous if nab != n0 => Some(format!(
            "continuous spectrum with N0 = {n0} but N_AB = {nab}"
        )),
        PointKind::Outside if nab > r => Some(format!("N0 = 0 but N_AB = {nab} > r = {r}")),
        _ => None,
    }
}

/// Per-point limit data over a grid.
#[derive(Clone, Debug)]
pub struct MultiplicityProfile {
    pub r: usize,
    pub grid: Vec<f64>,
    pub samples: Vec<LimitSample>,
}

impl MultiplicityProfile {
    pub fn violations(&self) -> Vec<(f64, String)> {
        self.samples
            .iter()
            .filter_map(|s| s.violation.clone().map(|v| (s.x, v)))
            .collect()
    }

    /// `x, alpha_rank, nab, regime, stable, growth_exponent`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "x,alpha_rank,nab,regime,stable,growth_exponent")?;
        for s in &self.samples {
            let nab = s.nab.as_ref().map_or(String::new(), |e| e.nab.to_string());
            let stable = s.stable && s.nab.as_ref().is_none_or(|e| e.stable);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.x,
                s.alpha_rank,
                nab,
                s.regime.map_or("", Regime::label),
                stable,
                s.growth_exponent
            )?;
        }
        Ok(())
    }

    /// Per-point `α` and predicted limit as JSON.
    pub fn point_json(&self, i: usize) -> serde_json::Value {
        let s = &self.samples[i];
        json!({
            "x": s.x,
            "alpha": matrix_to_rows(&s.alpha),
            "predicted_limit": s.predicted_limit.as_ref().map(matrix_to_rows),
            "predicted_rank": s.predicted_rank,
            "nab": s.nab.as_ref().map(|e| e.nab),
        })
    }
}

/// Run [`estimate_alpha`] and [`estimate_nab`] over a grid and flag
/// inconsistencies with the multiplicity theorem.
pub fn scan(
    graph: &StarGraph,
    ic: &InterfaceCondition,
    grid: &[f64],
    sched: &EpsSchedule,
    tol: f64,
) -> Result<MultiplicityProfile> {
    let coupling = Coupling::new(graph.clone(), ic.clone(), RankTolerance::default())?;
    let r = ic.rank_b();
    let mut samples = Vec::with_capacity(grid.len());
    for &x in grid {
        let (mut sample, est) = run_point(&coupling, x, sched, tol)?;
        sample.regime = Some(Regime::classify(sample.n0(), r));
        sample.violation = check_point(&sample, est.nab, r);
        sample.nab = Some(est);
        samples.push(sample);
    }
    Ok(MultiplicityProfile {
        r,
        grid: grid.to_vec(),
        samples,
    })
}
