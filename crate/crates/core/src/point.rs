//! Eigenvalue multiplicities of the coupled operator at a real point `x`.
//!
//! Each edge contributes boundary data at `x`: an eigenfunction of the
//! Dirichlet edge operator (`J_p`), a solution with `u(0) ≠ 0` and real
//! `m_l(x)` (`J_p* ∖ J_p`), an artificial constant (`J_m`), or nothing. The
//! coupled eigenspace is the image of `ker γ` with
//! `γ = A·D_S + B·(D_{J_p} + M·D_S)`, `S = (J_p* ∖ J_p) ∪ J_m`.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::interface::{satisfies_d4, InterfaceCondition};
use crate::numeric::{c64, singular_values, vstack, CMatrix, RankTolerance, MAX_MINOR_DIM};
use crate::weyl::{boundary_data, EdgeSpec, StarGraph};

/// Default threshold for `|u(0)| ≤ tol·(|u(0)| + |u'(0)|)`.
pub const U0_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    /// `x` is an eigenvalue of the Dirichlet edge operator.
    InJp,
    /// A solution with `u(0) ≠ 0` exists; boundary data `(1; m_l(x))`.
    InJpstarNotJp,
    /// Artificial edge.
    InJm,
    /// No admissible solution at `x`.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeClassification {
    pub edge_index: usize,
    pub class: EdgeClass,
    /// `m_l(x)` for the classes `InJpstarNotJp` and `InJm`.
    pub m_value: Option<f64>,
}

impl EdgeClassification {
    pub fn new(edge_index: usize, class: EdgeClass, m_value: Option<f64>) -> Result<Self> {
        let needs_m = matches!(class, EdgeClass::InJpstarNotJp | EdgeClass::InJm);
        match m_value {
            Some(m) if !m.is_finite() => Err(Error::input("m value must be finite")),
            Some(_) if !needs_m => Err(Error::input(format!("{class:?} carries no m value"))),
            None if needs_m => Err(Error::input(format!("{class:?} needs an m value"))),
            _ => Ok(EdgeClassification {
                edge_index,
                class,
                m_value,
            }),
        }
    }
}

fn data_class(edge_index: usize, u0: f64, du0: f64, tol: f64) -> EdgeClassification {
    if u0.abs() <= tol * (u0.abs() + du0.abs()) {
        EdgeClassification {
            edge_index,
            class: EdgeClass::InJp,
            m_value: None,
        }
    } else {
        EdgeClassification {
            edge_index,
            class: EdgeClass::InJpstarNotJp,
            m_value: Some(du0 / u0),
        }
    }
}

/// Classify one edge at real `x`.
pub fn classify_edge_at(
    edge_index: usize,
    edge: &EdgeSpec,
    x: f64,
    tol: f64,
) -> Result<EdgeClassification> {
    if !x.is_finite() {
        return Err(Error::input("x must be finite"));
    }
    match edge {
        EdgeSpec::Artificial { m_const } => {
            EdgeClassification::new(edge_index, EdgeClass::InJm, Some(*m_const))
        }
        EdgeSpec::HalfLine { .. } if x >= 0.0 => Ok(EdgeClassification {
            edge_index,
            class: EdgeClass::None,
            m_value: None,
        }),
        _ => {
            // For a half-line and x < 0 the shooting data is the decaying solution.
            let y = boundary_data(edge, c64(x, 0.0), false)?.expect("non-artificial edge");
            let (u0, du0) = (y[0], y[1]);
            // Real data up to a common phase (half-lines start from e^{i√x s}).
            let phase = if u0.norm() >= du0.norm() { u0 } else { du0 };
            let phase = phase / phase.norm();
            let (u0, du0) = ((u0 / phase).re, (du0 / phase).re);
            Ok(data_class(edge_index, u0, du0, tol))
        }
    }
}

#[derive(Clone, Debug)]
pub struct GammaProblem {
    pub x: f64,
    pub gamma: CMatrix,
    pub jp: Vec<usize>,
    /// `J_p*`, containing `J_p`.
    pub jp_star: Vec<usize>,
    pub jm: Vec<usize>,
    pub ker_gamma_dim: usize,
    pub ker_gamma_cap_ker_xi_dim: usize,
    pub np_ab: usize,
    pub np_0: usize,
    /// 1 when `#((J_p* ∖ J_p) ∪ J_m) ≤ n − r`, else 2.
    pub lemma5_case: u8,
    pub r: usize,
}

impl GammaProblem {
    pub fn n(&self) -> usize {
        self.gamma.nrows()
    }

    /// Compare the kernel dimensions with the closed forms (case 1) or the
    /// bounds (case 2).
    pub fn check_kernel_dims(&self) -> Result<()> {
        let n = self.n();
        let r = self.r;
        let free = n - self.jp_star.len() - self.jm.len();
        let (kg, kc) = (self.ker_gamma_dim, self.ker_gamma_cap_ker_xi_dim);
        let ok = if self.lemma5_case == 1 {
            kg == self.jp.len().saturating_sub(r) + free && kc == free
        } else {
            kg + self.jp.len() <= r && kc >= free
        };
        if ok {
            Ok(())
        } else {
            Err(Error::TheoremViolation(format!(
                "kernel dimensions ({kg}, {kc}) contradict case {} with n = {n}, r = {r}, #Jp = {}, #Jp* = {}, #Jm = {}",
                self.lemma5_case,
                self.jp.len(),
                self.jp_star.len(),
                self.jm.len()
            )))
        }
    }

    /// `N_AB = N_0 − r` when `N_0 ≥ r`, `N_AB ≤ r − N_0` otherwise.
    pub fn check_theorem(&self) -> Result<()> {
        let (np0, r, nab) = (self.np_0, self.r, self.np_ab);
        let ok = if np0 >= r {
            nab == np0 - r
        } else {
            nab <= r - np0
        };
        if ok {
            Ok(())
        } else {
            Err(Error::TheoremViolation(format!(
                "N_AB = {nab} with N_0 = {np0}, r = {r} at x = {}",
                self.x
            )))
        }
    }
}

/// Numerical nullity of `m`, with singular values measured against `scale`
/// rather than the largest one (so a matrix of round-off has full nullity).
fn nullity(m: &CMatrix, scale: f64, tol: RankTolerance) -> usize {
    let rank = singular_values(m)
        .iter()
        .filter(|&&s| s > tol.value() * scale)
        .count();
    m.ncols() - rank
}

/// Assemble `γ` and the kernel dimensions.
pub fn build_gamma(
    ic: &InterfaceCondition,
    x: f64,
    classes: &[EdgeClassification],
    tol: RankTolerance,
) -> Result<GammaProblem> {
    let n = ic.n();
    if classes.len() != n {
        return Err(Error::input(format!(
            "{} classifications for {n} edges",
            classes.len()
        )));
    }
    let mut d_jp = vec![0.0; n];
    let mut d_s = vec![0.0; n];
    let mut m = vec![0.0; n];
    let (mut jp, mut jp_star, mut jm) = (Vec::new(), Vec::new(), Vec::new());
    for (l, c) in classes.iter().enumerate() {
        match c.class {
            EdgeClass::InJp => {
                d_jp[l] = 1.0;
                jp.push(l);
                jp_star.push(l);
            }
            EdgeClass::InJpstarNotJp => {
                d_s[l] = 1.0;
                m[l] = c.m_value.ok_or_else(|| Error::input("missing m value"))?;
                jp_star.push(l);
            }
            EdgeClass::InJm => {
                d_s[l] = 1.0;
                m[l] = c.m_value.ok_or_else(|| Error::input("missing m value"))?;
                jm.push(l);
            }
            EdgeClass::None => {}
        }
    }
    let (a, b) = (ic.a(), ic.b());
    // γ = A·D_S + B·(D_Jp + M·D_S), column by column.
    let mut gamma = CMatrix::zeros(n, n);
    for l in 0..n {
        let col = a.column(l) * c64(d_s[l], 0.0) + b.column(l) * c64(d_jp[l] + m[l] * d_s[l], 0.0);
        gamma.set_column(l, &col);
    }
    let m_max = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale = a.norm() + b.norm() * (1.0 + m_max);

    let ker_gamma_dim = nullity(&gamma, scale, tol);
    let mut d_star = CMatrix::zeros(n, n);
    for &l in &jp_star {
        d_star[(l, l)] = c64(scale, 0.0);
    }
    let ker_cap = nullity(&vstack(&gamma, &d_star), scale, tol);
    if ker_cap > ker_gamma_dim {
        return Err(Error::Inconsistency(
            "intersection larger than ker γ".into(),
        ));
    }
    let s_count = jp_star.len() - jp.len() + jm.len();
    let r = ic.rank_b();
    Ok(GammaProblem {
        x,
        gamma,
        np_0: jp.len(),
        jp,
        jp_star,
        jm,
        ker_gamma_dim,
        ker_gamma_cap_ker_xi_dim: ker_cap,
        np_ab: ker_gamma_dim - ker_cap,
        lemma5_case: if s_count <= n - r { 1 } else { 2 },
        r,
    })
}

/// Classify all edges, assemble `γ`, and check both the dimension formulas
/// and the multiplicity theorem.
pub fn point_multiplicity(
    graph: &StarGraph,
    ic: &InterfaceCondition,
    x: f64,
    u0_tol: f64,
    tol: RankTolerance,
) -> Result<GammaProblem> {
    if graph.n() != ic.n() {
        return Err(Error::input("graph and interface condition differ in size"));
    }
    if ic.n() <= MAX_MINOR_DIM && !satisfies_d4(ic, tol)? {
        return Err(Error::D4Violation(
            "multiplicity formulas need a mixing condition".into(),
        ));
    }
    let classes = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| classify_edge_at(i, e, x, u0_tol).map_err(|err| err.at_edge(i)))
        .collect::<Result<Vec<_>>>()?;
    let gp = build_gamma(ic, x, &classes, tol)?;
    gp.check_kernel_dims()?;
    gp.check_theorem()?;
    Ok(gp)
}

struct IndexList<'a>(&'a [usize]);

impl fmt::Display for IndexList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

/// Table `x, J_p, J_p*, J_m, Np_0, Np_AB, lemma5_case`.
pub fn write_table<W: Write>(out: &mut W, rows: &[GammaProblem]) -> Result<()> {
    writeln!(out, "x,J_p,J_p*,J_m,Np_0,Np_AB,lemma5_case")?;
    for g in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            g.x,
            IndexList(&g.jp),
            IndexList(&g.jp_star),
            IndexList(&g.jm),
            g.np_0,
            g.np_ab,
            g.lemma5_case
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::Potential;
    use std::f64::consts::PI;

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    #[test]
    fn classify_pi_edge() {
        let e = EdgeSpec::dirichlet(PI);
        assert_eq!(
            classify_edge_at(0, &e, 1.0, U0_TOL).unwrap().class,
            EdgeClass::InJp
        );
        let c = classify_edge_at(0, &e, 2.0, U0_TOL).unwrap();
        assert_eq!(c.class, EdgeClass::InJpstarNotJp);
        let k = 2.0f64.sqrt();
        assert!((c.m_value.unwrap() + k / (k * PI).tan()).abs() < 1e-10);
        let c = classify_edge_at(1, &EdgeSpec::Artificial { m_const: 0.0 }, 3.0, U0_TOL).unwrap();
        assert_eq!((c.class, c.m_value), (EdgeClass::InJm, Some(0.0)));
    }

    #[test]
    fn classify_half_line() {
        let e = EdgeSpec::free_half_line();
        assert_eq!(
            classify_edge_at(0, &e, 1.0, U0_TOL).unwrap().class,
            EdgeClass::None
        );
        let c = classify_edge_at(0, &e, -4.0, U0_TOL).unwrap();
        assert_eq!(c.class, EdgeClass::InJpstarNotJp);
        assert!((c.m_value.unwrap() + 2.0).abs() < 1e-12);
        // The decaying solution exists for every x < 0; u(0) vanishes only at
        // Dirichlet bound states of the well.
        let well = EdgeSpec::HalfLine {
            potential: Potential::samples(vec![0.0, 2.0], vec![-10.0, -10.0]).unwrap(),
        };
        let c = classify_edge_at(0, &well, -1.0, U0_TOL).unwrap();
        assert_eq!(c.class, EdgeClass::InJpstarNotJp);
    }

    #[test]
    fn all_none_gives_nothing() {
        let ic = InterfaceCondition::standard(3).unwrap();
        let classes: Vec<_> = (0..3)
            .map(|i| EdgeClassification::new(i, EdgeClass::None, None).unwrap())
            .collect();
        let g = build_gamma(&ic, 0.0, &classes, tol()).unwrap();
        assert_eq!(g.gamma.norm(), 0.0);
        assert_eq!(
            (g.ker_gamma_dim, g.ker_gamma_cap_ker_xi_dim, g.np_ab),
            (3, 3, 0)
        );
    }

    #[test]
    fn all_eigen_standard() {
        let ic = InterfaceCondition::standard(3).unwrap();
        let classes: Vec<_> = (0..3)
            .map(|i| EdgeClassification::new(i, EdgeClass::InJp, None).unwrap())
            .collect();
        let g = build_gamma(&ic, 1.0, &classes, tol()).unwrap();
        assert_eq!(
            (g.ker_gamma_dim, g.ker_gamma_cap_ker_xi_dim, g.np_ab),
            (2, 0, 2)
        );
        g.check_kernel_dims().unwrap();
        g.check_theorem().unwrap();
    }

    #[test]
    fn neumann_vertex_counts_zeros_of_m() {
        let ic = InterfaceCondition::antidecoupled(2).unwrap();
        let classes = vec![
            EdgeClassification::new(0, EdgeClass::InJpstarNotJp, Some(0.0)).unwrap(),
            EdgeClassification::new(1, EdgeClass::InJpstarNotJp, Some(0.7)).unwrap(),
        ];
        let g = build_gamma(&ic, 0.0, &classes, tol()).unwrap();
        assert_eq!(g.np_ab, 1);
    }

    #[test]
    fn fixtures() {
        let st = InterfaceCondition::standard(3).unwrap();
        let g = StarGraph::dirichlet(&[PI; 3]).unwrap();
        for x in [1.0, 4.0, 9.0] {
            let p = point_multiplicity(&g, &st, x, U0_TOL, tol()).unwrap();
            assert_eq!((p.np_0, p.np_ab), (3, 2));
        }
        let g = StarGraph::dirichlet(&[PI, PI, PI / 2.0]).unwrap();
        let p = point_multiplicity(&g, &st, 1.0, U0_TOL, tol()).unwrap();
        assert_eq!((p.np_0, p.np_ab), (2, 1));
        let p = point_multiplicity(&g, &st, 4.0, U0_TOL, tol()).unwrap();
        assert_eq!((p.np_0, p.np_ab), (3, 2));
        let g = StarGraph::dirichlet(&[PI; 2]).unwrap();
        let p = point_multiplicity(
            &g,
            &InterfaceCondition::antidecoupled(2).unwrap(),
            0.25,
            U0_TOL,
            tol(),
        )
        .unwrap();
        assert_eq!((p.np_0, p.np_ab), (0, 2));
    }

    #[test]
    fn table_output() {
        let st = InterfaceCondition::standard(3).unwrap();
        let g = StarGraph::dirichlet(&[PI; 3]).unwrap();
        let p = point_multiplicity(&g, &st, 1.0, U0_TOL, tol()).unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &[p]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("1,{0 1 2},{0 1 2},{},3,2,1"));
    }
}
