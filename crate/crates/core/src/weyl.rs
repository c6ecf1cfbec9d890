//! Edge Weyl functions `m_l(z) = u'(0)/u(0)` and the diagonal `M₀(z)`.
//!
//! `u` solves `−u'' + q u = z u` on the edge and satisfies the outer boundary
//! condition `cos β·u(L) + sin β·u'(L) = 0` (regular edge) or is square
//! integrable (half-line). The derivative at the vertex points into the edge.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{c64, diag, CMatrix};
use crate::ode::{shoot_piecewise, OdeOptions, State};

/// `|u(0)| ≤ POLE_TOL·(|u(0)| + |u'(0)|)` counts as a zero of `u(0)`.
const POLE_TOL: f64 = 1e-12;
/// Allowed negative imaginary part, relative to `1 + |m|`.
const HERGLOTZ_SLACK: f64 = 1e-10;

/// Real potential on an edge, zero outside the sampled range.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero,
    /// Linear interpolation between `(xs[i], qs[i])`.
    Samples {
        xs: Vec<f64>,
        qs: Vec<f64>,
    },
}

impl Potential {
    pub fn samples(xs: Vec<f64>, qs: Vec<f64>) -> Result<Self> {
        if xs.len() != qs.len() || xs.len() < 2 {
            return Err(Error::input(
                "potential needs at least two (x, q) samples of equal count",
            ));
        }
        if xs.iter().chain(&qs).any(|v| !v.is_finite()) {
            return Err(Error::input("potential samples must be finite"));
        }
        if xs[0] < 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input(
                "potential abscissae must be nonnegative and increasing",
            ));
        }
        Ok(Potential::Samples { xs, qs })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Samples { qs, .. } => qs.iter().all(|&q| q == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Samples { xs, qs } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (x - x0) / (x1 - x0);
                qs[i - 1] * (1.0 - w) + qs[i] * w
            }
        }
    }

    /// End of the support (0 for the zero potential).
    pub fn support_end(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Samples { xs, .. } => xs[xs.len() - 1],
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Potential::Zero => Vec::new(),
            Potential::Samples { xs, .. } => xs.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeSpec {
    /// Finite edge `[0, length]` with outer condition
    /// `cos β·u(L) + sin β·u'(L) = 0`, `β ∈ [0, π)`.
    Regular {
        length: f64,
        potential: Potential,
        beta: f64,
    },
    /// `[0, ∞)` with compactly supported potential.
    HalfLine { potential: Potential },
    /// No Hilbert space; the Weyl function is the real constant `m_const`.
    Artificial { m_const: f64 },
}

impl EdgeSpec {
    pub fn regular(length: f64, beta: f64) -> Self {
        EdgeSpec::Regular {
            length,
            potential: Potential::Zero,
            beta,
        }
    }

    pub fn dirichlet(length: f64) -> Self {
        Self::regular(length, 0.0)
    }

    pub fn free_half_line() -> Self {
        EdgeSpec::HalfLine {
            potential: Potential::Zero,
        }
    }

    pub fn is_artificial(&self) -> bool {
        matches!(self, EdgeSpec::Artificial { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EdgeSpec::Regular {
                length,
                potential,
                beta,
            } => {
                if !(length.is_finite() && *length > 0.0) {
                    return Err(Error::input(format!(
                        "edge length must be positive, got {length}"
                    )));
                }
                if !(0.0..std::f64::consts::PI).contains(beta) {
                    return Err(Error::input(format!(
                        "outer angle must lie in [0, π), got {beta}"
                    )));
                }
                if potential.support_end() > *length * (1.0 + 1e-12) {
                    return Err(Error::input("potential samples extend beyond the edge"));
                }
                Ok(())
            }
            EdgeSpec::HalfLine { .. } => Ok(()),
            EdgeSpec::Artificial { m_const } => {
                if m_const.is_finite() {
                    Ok(())
                } else {
                    Err(Error::input("artificial constant must be finite"))
                }
            }
        }
    }
}

/// Square root with `Im √z ≥ 0`; `i·√z` is then Herglotz.
pub fn weyl_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// `(u(0), u'(0))` for the solution singled out by the edge, up to a common
/// factor. `None` for artificial edges.
pub fn boundary_data(edge: &EdgeSpec, z: Complex64, shooting: bool) -> Result<Option<State>> {
    edge.validate()?;
    match edge {
        EdgeSpec::Artificial { .. } => Ok(None),
        EdgeSpec::Regular {
            length,
            potential,
            beta,
        } => {
            let (sb, cb) = beta.sin_cos();
            if potential.is_zero() && !shooting {
                return Ok(Some(closed_form_regular(*length, sb, cb, z)));
            }
            let y0 = [c64(sb, 0.0), c64(-cb, 0.0)];
            let q = |x: f64| potential.eval(x);
            let y = shoot_piecewise(
                &q,
                z,
                *length,
                0.0,
                &potential.breakpoints(),
                y0,
                OdeOptions::default(),
            )?;
            Ok(Some(y))
        }
        EdgeSpec::HalfLine { potential } => {
            let k = weyl_sqrt(z);
            let s = potential.support_end();
            let ik = c64(0.0, 1.0) * k;
            if s == 0.0 || (potential.is_zero() && !shooting) {
                return Ok(Some([c64(1.0, 0.0), ik]));
            }
            // e^{ikx} beyond the support, up to the constant e^{iks}.
            let q = |x: f64| potential.eval(x);
            let y = shoot_piecewise(
                &q,
                z,
                s,
                0.0,
                &potential.breakpoints(),
                [c64(1.0, 0.0), ik],
                OdeOptions::default(),
            )?;
            Ok(Some(y))
        }
    }
}

fn closed_form_regular(length: f64, sb: f64, cb: f64, z: Complex64) -> State {
    let k = weyl_sqrt(z);
    let kl = k * length;
    // sin(kL)/k and k·sin(kL), continued through k = 0.
    let (sinc, ksin) = if kl.norm() < 1e-6 {
        let k2 = z;
        (
            c64(length, 0.0) * (c64(1.0, 0.0) - k2 * (length * length / 6.0)),
            k2 * length * (c64(1.0, 0.0) - k2 * (length * length / 6.0)),
        )
    } else {
        (kl.sin() / k, k * kl.sin())
    };
    let u0 = kl.cos() * sb + sinc * cb;
    let du0 = ksin * sb - kl.cos() * cb;
    [u0, du0]
}

fn m_from_data(edge: &EdgeSpec, z: Complex64, y: State, shooting: bool) -> Result<Complex64> {
    let (u0, du0) = (y[0], y[1]);
    if u0.norm() <= POLE_TOL * (u0.norm() + du0.norm()) {
        let delta = 1e-6 * (1.0 + z.norm());
        let residue = match eval_inner(edge, z + c64(0.0, delta), shooting) {
            Ok(m) => m * c64(0.0, delta),
            Err(_) => c64(f64::NAN, f64::NAN),
        };
        return Err(Error::Pole { z, residue });
    }
    let m = du0 / u0;
    check_herglotz(z, m)?;
    Ok(m)
}

fn check_herglotz(z: Complex64, m: Complex64) -> Result<()> {
    let slack = HERGLOTZ_SLACK * (1.0 + m.norm());
    if (z.im > 0.0 && m.im < -slack) || (z.im < 0.0 && m.im > slack) {
        return Err(Error::Herglotz(format!("m({z}) = {m}")));
    }
    Ok(())
}

fn eval_inner(edge: &EdgeSpec, z: Complex64, shooting: bool) -> Result<Complex64> {
    if let EdgeSpec::Artificial { m_const } = edge {
        edge.validate()?;
        return Ok(c64(*m_const, 0.0));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::input("z must be finite"));
    }
    let y = boundary_data(edge, z, shooting)?.expect("non-artificial edge has boundary data");
    m_from_data(edge, z, y, shooting)
}

/// `m_l(z)`: closed form for vanishing potentials, shooting otherwise.
pub fn eval_m_edge(edge: &EdgeSpec, z: Complex64) -> Result<Complex64> {
    eval_inner(edge, z, false)
}

/// `m_l(z)` by numerical integration even when a closed form exists.
pub fn eval_m_edge_shooting(edge: &EdgeSpec, z: Complex64) -> Result<Complex64> {
    eval_inner(edge, z, true)
}

/// Ordered edges of a star graph; at least two, not all artificial.
#[derive(Clone, Debug, PartialEq)]
pub struct StarGraph {
    edges: Vec<EdgeSpec>,
}

impl StarGraph {
    pub fn new(edges: Vec<EdgeSpec>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::input(format!(
                "a star graph needs at least two edges, got {}",
                edges.len()
            )));
        }
        if edges.iter().all(EdgeSpec::is_artificial) {
            return Err(Error::input("at least one edge must be non-artificial"));
        }
        for (i, e) in edges.iter().enumerate() {
            e.validate().map_err(|err| err.at_edge(i))?;
        }
        Ok(StarGraph { edges })
    }

    /// `n` Dirichlet edges of the given lengths with `q = 0`.
    pub fn dirichlet(lengths: &[f64]) -> Result<Self> {
        Self::new(lengths.iter().map(|&l| EdgeSpec::dirichlet(l)).collect())
    }

    pub fn free_half_lines(n: usize) -> Result<Self> {
        Self::new(vec![EdgeSpec::free_half_line(); n])
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn non_artificial_count(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_artificial()).count()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(s)?;
        raw.into_graph()
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            edges: self.edges.iter().map(EdgeJson::from_spec).collect(),
        }
    }
}

/// Values of all edge Weyl functions at one point.
#[derive(Clone, Debug)]
pub struct WeylSample {
    pub z: Complex64,
    pub m: Vec<Complex64>,
}

impl WeylSample {
    /// `M₀(z) = diag(m_1, …, m_n)`.
    pub fn m0(&self) -> CMatrix {
        diag(&self.m)
    }

    /// `m = Σ m_l`.
    pub fn trace(&self) -> Complex64 {
        self.m.iter().sum()
    }

    pub fn im_trace(&self) -> f64 {
        self.m.iter().map(|m| m.im).sum()
    }
}

pub fn eval_m0(graph: &StarGraph, z: Complex64) -> Result<WeylSample> {
    if z.im == 0.0 {
        return Err(Error::input("M0 is evaluated off the real axis"));
    }
    let mut m = Vec::with_capacity(graph.n());
    for (i, e) in graph.edges().iter().enumerate() {
        let v = eval_m_edge(e, z).map_err(|err| err.at_edge(i))?;
        let w = eval_m_edge(e, z.conj()).map_err(|err| err.at_edge(i))?;
        if (w - v.conj()).norm() > 1e-10 * (1.0 + v.norm()) {
            return Err(Error::Edge {
                edge: i,
                source: Box::new(Error::Herglotz(format!(
                    "m(conj z) = {w} differs from conj m(z) = {}",
                    v.conj()
                ))),
            });
        }
        m.push(v);
    }
    Ok(WeylSample { z, m })
}

/// Per-edge findings of [`herglotz_diagnostic`].
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDiagnostic {
    pub edge: usize,
    /// Samples with `Im m < −1e−12`.
    pub positivity_violations: usize,
    /// Consecutive pairs where `ε·Im m(x + iε)` decreases as `ε` grows.
    pub monotonicity_violations: usize,
    /// Log-log slope of `Im m(x + iε)` against `ε`: about −1 at a pole,
    /// 0 on absolutely continuous spectrum. `None` when `Im m` vanishes.
    pub growth_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HerglotzReport {
    pub x0: f64,
    pub eps: Vec<f64>,
    pub edges: Vec<EdgeDiagnostic>,
}

impl HerglotzReport {
    pub fn is_clean(&self) -> bool {
        self.edges
            .iter()
            .all(|e| e.positivity_violations == 0 && e.monotonicity_violations == 0)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Checks samples `M₀(x₀ + iε)` taken along a vertical line.
pub fn herglotz_diagnostic(samples: &[WeylSample]) -> Result<HerglotzReport> {
    if samples.len() < 2 {
        return Err(Error::input("need at least two samples"));
    }
    let x0 = samples[0].z.re;
    let n = samples[0].m.len();
    for s in samples {
        if (s.z.re - x0).abs() > 1e-12 * (1.0 + x0.abs()) || s.z.im <= 0.0 || s.m.len() != n {
            return Err(Error::input(
                "samples must share the real part and lie in the upper half-plane",
            ));
        }
    }
    let mut sorted: Vec<&WeylSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.z.im.total_cmp(&b.z.im));
    let eps: Vec<f64> = sorted.iter().map(|s| s.z.im).collect();
    if eps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("sample heights must be distinct"));
    }

    let edges = (0..n)
        .map(|l| {
            let im: Vec<f64> = sorted.iter().map(|s| s.m[l].im).collect();
            let positivity_violations = im.iter().filter(|&&v| v < -1e-12).count();
            let scaled: Vec<f64> = im.iter().zip(&eps).map(|(v, e)| v * e).collect();
            let monotonicity_violations = scaled
                .windows(2)
                .filter(|w| w[1] < w[0] - 1e-12 * (1.0 + w[0].abs()))
                .count();
            let growth_exponent = if im.iter().all(|&v| v > 0.0) {
                let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
                let ly: Vec<f64> = im.iter().map(|v| v.ln()).collect();
                Some(fit_slope(&lx, &ly))
            } else {
                None
            };
            EdgeDiagnostic {
                edge: l,
                positivity_violations,
                monotonicity_violations,
                growth_exponent,
            }
        })
        .collect();
    Ok(HerglotzReport { x0, eps, edges })
}

/// Wire format of a star graph.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphJson {
    pub edges: Vec<EdgeJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_bc: Option<OuterBcJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_const: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PotentialJson {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OuterBcJson {
    pub beta: f64,
}

impl GraphJson {
    pub fn into_graph(self) -> Result<StarGraph> {
        let edges = self
            .edges
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.into_spec().map_err(|err| err.at_edge(i)))
            .collect::<Result<Vec<_>>>()?;
        StarGraph::new(edges)
    }
}

impl PotentialJson {
    fn into_potential(self) -> Result<Potential> {
        match self.kind.as_str() {
            "zero" => Ok(Potential::Zero),
            "samples" => Potential::samples(self.xs, self.qs),
            other => Err(Error::input(format!("unknown potential type '{other}'"))),
        }
    }

    fn from_potential(p: &Potential) -> Self {
        match p {
            Potential::Zero => PotentialJson {
                kind: "zero".into(),
                xs: Vec::new(),
                qs: Vec::new(),
            },
            Potential::Samples { xs, qs } => PotentialJson {
                kind: "samples".into(),
                xs: xs.clone(),
                qs: qs.clone(),
            },
        }
    }
}

impl EdgeJson {
    fn into_spec(self) -> Result<EdgeSpec> {
        let potential = self
            .potential
            .map(PotentialJson::into_potential)
            .transpose()?
            .unwrap_or(Potential::Zero);
        let spec = match self.kind.as_str() {
            "regular" => EdgeSpec::Regular {
                length: self
                    .length
                    .ok_or_else(|| Error::input("regular edge needs a length"))?,
                potential,
                beta: self.outer_bc.map(|b| b.beta).unwrap_or(0.0),
            },
            "half_line" => EdgeSpec::HalfLine { potential },
            "artificial" => EdgeSpec::Artificial {
                m_const: self
                    .m_const
                    .ok_or_else(|| Error::input("artificial edge needs m_const"))?,
            },
            other => return Err(Error::input(format!("unknown edge kind '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn from_spec(spec: &EdgeSpec) -> Self {
        match spec {
            EdgeSpec::Regular {
                length,
                potential,
                beta,
            } => EdgeJson {
                kind: "regular".into(),
                length: Some(*length),
                potential: Some(PotentialJson::from_potential(potential)),
                outer_bc: Some(OuterBcJson { beta: *beta }),
                m_const: None,
            },
            EdgeSpec::HalfLine { potential } => EdgeJson {
                kind: "half_line".into(),
                length: None,
                potential: Some(PotentialJson::from_potential(potential)),
                outer_bc: None,
                m_const: None,
            },
            EdgeSpec::Artificial { m_const } => EdgeJson {
                kind: "artificial".into(),
                length: None,
                potential: None,
                outer_bc: None,
                m_const: Some(*m_const),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_pi_edge_at_minus_one() {
        let e = EdgeSpec::dirichlet(PI);
        let m = eval_m_edge(&e, c64(-1.0, 0.0)).unwrap();
        let expected = -1.0 / PI.tanh();
        assert!((m.re - expected).abs() < 1e-12, "{m}");
        let ms = eval_m_edge_shooting(&e, c64(-1.0, 0.0)).unwrap();
        assert!((ms - m).norm() < 1e-10, "{ms} vs {m}");
    }

    #[test]
    fn free_half_line_at_i() {
        let m = eval_m_edge(&EdgeSpec::free_half_line(), c64(0.0, 1.0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m - c64(-s, s)).norm() < 1e-12);
        let lower = eval_m_edge(&EdgeSpec::free_half_line(), c64(0.0, -1.0)).unwrap();
        assert!((lower - m.conj()).norm() < 1e-12);
    }

    #[test]
    fn artificial_is_constant() {
        let e = EdgeSpec::Artificial { m_const: 2.5 };
        assert_eq!(eval_m_edge(&e, c64(3.0, 7.0)).unwrap(), c64(2.5, 0.0));
    }

    #[test]
    fn pole_at_dirichlet_eigenvalue() {
        match eval_m_edge(&EdgeSpec::dirichlet(PI), c64(1.0, 0.0)) {
            Err(Error::Pole { residue, .. }) => {
                // −√z cot(√z π) ≈ −(2/π)/(z − 1) near z = 1.
                assert!((residue.re + 2.0 / PI).abs() < 1e-4, "{residue}");
            }
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn shooting_matches_closed_form_for_all_outer_angles() {
        for beta in [0.0, 0.7, PI / 2.0, 2.5] {
            let e = EdgeSpec::regular(2.0, beta);
            for z in [c64(3.0, 0.5), c64(-20.0, 1.0), c64(50.0, 1e-3)] {
                let a = eval_m_edge(&e, z).unwrap();
                let b = eval_m_edge_shooting(&e, z).unwrap();
                assert!(
                    (a - b).norm() <= 1e-8 * a.norm().max(1.0),
                    "beta={beta} z={z}: {a} {b}"
                );
            }
        }
    }

    #[test]
    fn potential_interpolation() {
        let p = Potential::samples(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.5), 1.0);
        assert_eq!(p.eval(3.0), 0.0);
        assert!(Potential::samples(vec![1.0, 0.5], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn half_line_with_potential_matches_nested_shooting() {
        // A barrier on [0, 1] followed by the free line.
        let p = Potential::samples(vec![0.0, 1.0], vec![3.0, 3.0]).unwrap();
        let e = EdgeSpec::HalfLine { potential: p };
        let z = c64(1.0, 1.0);
        let m = eval_m_edge(&e, z).unwrap();
        // Piecewise closed form: constant q = 3 on [0, 1].
        let k = weyl_sqrt(z);
        let kappa = weyl_sqrt(z - 3.0);
        let (u1, du1) = (c64(1.0, 0.0), c64(0.0, 1.0) * k);
        let c = (kappa).cos();
        let s = (kappa).sin();
        // Propagate from x = 1 back to x = 0.
        let u0 = u1 * c - du1 * s / kappa;
        let du0 = u1 * kappa * s + du1 * c;
        assert!((m - du0 / u0).norm() < 1e-9, "{m} vs {}", du0 / u0);
    }

    #[test]
    fn graph_json_round_trip() {
        let g = StarGraph::new(vec![
            EdgeSpec::dirichlet(PI),
            EdgeSpec::free_half_line(),
            EdgeSpec::Artificial { m_const: 0.0 },
        ])
        .unwrap();
        let text = serde_json::to_string(&g.to_json()).unwrap();
        assert_eq!(StarGraph::from_json_str(&text).unwrap(), g);
        assert!(
            StarGraph::from_json_str(r#"{"edges":[{"kind":"artificial","m_const":1}]}"#).is_err()
        );
    }

    #[test]
    fn graph_rejects_all_artificial() {
        let e = EdgeSpec::Artificial { m_const: 0.0 };
        assert!(StarGraph::new(vec![e.clone(), e]).is_err());
    }

    #[test]
    fn m0_examples() {
        let g = StarGraph::free_half_lines(2).unwrap();
        let s = eval_m0(&g, c64(0.0, 1.0)).unwrap();
        let expected = c64(0.0, 1.0) * c64(0.0, 1.0).sqrt();
        assert!(s.m.iter().all(|m| (m - expected).norm() < 1e-12));
        let g = StarGraph::new(vec![
            EdgeSpec::free_half_line(),
            EdgeSpec::Artificial { m_const: 0.0 },
        ])
        .unwrap();
        let s = eval_m0(&g, c64(0.0, 2.0)).unwrap();
        assert!((s.m[0] - c64(0.0, 1.0) * c64(0.0, 2.0).sqrt()).norm() < 1e-12);
        assert_eq!(s.m[1], c64(0.0, 0.0));
    }

    #[test]
    fn diagnostic_distinguishes_pole_from_ac() {
        let eps = [1e-2, 1e-3, 1e-4, 1e-5];
        let g = StarGraph::new(vec![
            EdgeSpec::free_half_line(),
            EdgeSpec::dirichlet(PI),
            EdgeSpec::Artificial { m_const: 1.0 },
        ])
        .unwrap();
        let samples: Vec<_> = eps
            .iter()
            .map(|&e| eval_m0(&g, c64(1.0, e)).unwrap())
            .collect();
        let rep = herglotz_diagnostic(&samples).unwrap();
        assert!(rep.is_clean());
        assert!(rep.edges[0].growth_exponent.unwrap().abs() < 0.01);
        assert!((rep.edges[1].growth_exponent.unwrap() + 1.0).abs() < 0.01);
        assert_eq!(rep.edges[2].growth_exponent, None);
        let last = samples.last().unwrap();
        assert!((last.m[0].im - 1.0).abs() < 1e-4);
    }
}
