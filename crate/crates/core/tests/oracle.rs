use std::f64::consts::PI;

use num_complex::Complex64;

use star_coupling::interface::InterfaceCondition;
use star_coupling::oracle::{assemble, eig_clusters, resolvent_rank_diff, GridSpec};
use star_coupling::weyl::StarGraph;

fn eigs(
    graph: &StarGraph,
    ic: &InterfaceCondition,
    points: usize,
    window: (f64, f64),
) -> Vec<(f64, usize)> {
    let op = assemble(graph, ic, &GridSpec::new(points, 40.0).unwrap()).unwrap();
    eig_clusters(&op, window, 1e-3)
        .unwrap()
        .clusters
        .iter()
        .map(|c| (c.center, c.multiplicity))
        .collect()
}

/// Roots of `Σ cot(k Lᵢ) = 0` in `(a, b)` by sign changes and bisection,
/// skipping the poles.
fn kirchhoff_roots(lengths: &[f64], a: f64, b: f64) -> Vec<f64> {
    let f = |k: f64| lengths.iter().map(|l| 1.0 / (k * l).tan()).sum::<f64>();
    let steps = 20000;
    let mut roots = Vec::new();
    for i in 0..steps {
        let (mut lo, mut hi) = (
            a + (b - a) * i as f64 / steps as f64,
            a + (b - a) * (i + 1) as f64 / steps as f64,
        );
        let (flo, fhi) = (f(lo), f(hi));
        // A pole of cot flips the sign from −∞ to +∞; a root goes the other way.
        if !(flo > 0.0 && fhi < 0.0) {
            continue;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

#[test]
fn kirchhoff_star_matches_secular_equation() {
    let lengths = [1.0, 1.3, 1.9];
    let graph = StarGraph::dirichlet(&lengths).unwrap();
    let ic = InterfaceCondition::standard(3).unwrap();
    let expected: Vec<f64> = kirchhoff_roots(&lengths, 0.05, 4.0)
        .into_iter()
        .map(|k| k * k)
        .collect();
    assert!(expected.len() >= 4);
    let window = (0.5, 12.0);
    let found = eigs(&graph, &ic, 2000, window);
    let inside: Vec<f64> = expected
        .into_iter()
        .filter(|x| *x > window.0 && *x < window.1)
        .collect();
    assert_eq!(found.len(), inside.len(), "{found:?} vs {inside:?}");
    for ((x, m), e) in found.iter().zip(&inside) {
        assert_eq!(*m, 1);
        assert!((x - e).abs() < 2e-3 * e.max(1.0), "{x} vs {e}");
    }
}

#[test]
fn decoupled_splits_into_dirichlet_edges() {
    let lengths = [1.0, 2.0];
    let graph = StarGraph::dirichlet(&lengths).unwrap();
    let ic = InterfaceCondition::decoupled(2).unwrap();
    let found = eigs(&graph, &ic, 1000, (1.0, 11.0));
    // (kπ/2)² for k = 1..6 from the long edge, π² from the short one.
    let mut expected: Vec<(f64, usize)> = (1..=6)
        .map(|k| ((k as f64 * PI / 2.0).powi(2), 1))
        .collect();
    expected.retain(|(x, _)| *x > 1.0 && *x < 11.0);
    for e in expected.iter_mut() {
        if (e.0 - PI * PI).abs() < 1e-9 {
            e.1 = 2;
        }
    }
    assert_eq!(found.len(), expected.len(), "{found:?}");
    for ((x, m), (ex, em)) in found.iter().zip(&expected) {
        assert_eq!(m, em);
        assert!((x - ex).abs() < 2e-3 * ex, "{x} vs {ex}");
    }
}

#[test]
fn second_order_convergence() {
    let lengths = [1.0, 1.3, 1.9];
    let graph = StarGraph::dirichlet(&lengths).unwrap();
    let ic = InterfaceCondition::standard(3).unwrap();
    let k = kirchhoff_roots(&lengths, 0.05, 4.0)[0];
    let exact = k * k;
    let window = (exact - 0.1, exact + 0.1);
    let err = |n| (eigs(&graph, &ic, n, window)[0].0 - exact).abs();
    let ratio = err(1000) / err(2000);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn resolvent_difference_rank_matches_codim() {
    let graph = StarGraph::dirichlet(&[1.0, 1.3, 1.9]).unwrap();
    let grid = GridSpec::new(60, 40.0).unwrap();
    let standard = InterfaceCondition::standard(3).unwrap();
    let decoupled = InterfaceCondition::decoupled(3).unwrap();
    let z = Complex64::new(0.5, 1.0);
    let report = resolvent_rank_diff(&graph, &standard, &decoupled, z, &grid, 1e-6).unwrap();
    assert_eq!(report.codim, 1);
    assert_eq!(report.observed, 1);
}
