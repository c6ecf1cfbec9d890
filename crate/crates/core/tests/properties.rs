use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use star_coupling::coupling::eval_mw;
use star_coupling::interface::random::{
    gaussian_matrix, random_interface, random_invertible, random_permutation, random_unitary,
};
use star_coupling::interface::{
    complete_j_unitary, coupling_codim, reduce_rank, satisfies_d4, self_adjointness_residual,
    to_normal_form, InterfaceCondition,
};
use star_coupling::numeric::{
    c64, min_hermitian_eigenvalue, permutation_matrix, rank_tol, svd, CMatrix, RankTolerance,
};
use star_coupling::weyl::{eval_m_edge, eval_m_edge_shooting, EdgeSpec, StarGraph};

fn tol() -> RankTolerance {
    RankTolerance::new(1e-8).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn rank_is_unitarily_invariant(seed in any::<u64>(), n in 2usize..8, k_frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let k = ((n as f64) * k_frac) as usize;
        let m = gaussian_matrix(n, k, &mut r) * gaussian_matrix(k, n, &mut r);
        let u = random_unitary(n, &mut r);
        let v = random_unitary(n, &mut r);
        prop_assert_eq!(rank_tol(&m, tol()).unwrap(), k);
        prop_assert_eq!(rank_tol(&(&u * &m * &v), tol()).unwrap(), k);
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, k in 0usize..9) {
        let mut r = rng(seed);
        let k = k.min(rows).min(cols);
        let m = gaussian_matrix(rows, k, &mut r) * gaussian_matrix(k, cols, &mut r);
        let s = svd(&m);
        let sigma = CMatrix::from_fn(s.u.ncols(), s.v.ncols(), |i, j| {
            if i == j { c64(s.singular_values[i], 0.0) } else { c64(0.0, 0.0) }
        });
        let back = &s.u * sigma * s.v.adjoint();
        prop_assert!((back - &m).norm() <= 1e-12 * m.norm().max(1.0));
        let vtv = s.v.adjoint() * &s.v;
        prop_assert!((vtv - CMatrix::identity(cols, cols)).norm() < 1e-12);
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn random_conditions_are_self_adjoint_with_requested_rank(
        seed in any::<u64>(), n in 1usize..7, r_frac in 0.0f64..=1.0,
    ) {
        let r = ((n as f64) * r_frac).round() as usize;
        let ic = random_interface(n, r, &mut rng(seed), tol()).unwrap();
        prop_assert_eq!(ic.rank_b(), r);
        prop_assert!(self_adjointness_residual(ic.a(), ic.b()) < 1e-12);
        prop_assert!(satisfies_d4(&ic, tol()).unwrap());
    }

    #[test]
    fn completion_is_j_unitary(seed in any::<u64>(), n in 1usize..7, r in 0usize..7) {
        let ic = random_interface(n, r.min(n), &mut rng(seed), tol()).unwrap();
        let w = complete_j_unitary(&ic).unwrap();
        let (left, right) = w.residuals();
        prop_assert!(left < 1e-10 && right < 1e-10, "residuals {left:e} {right:e}");
    }

    #[test]
    fn left_multiplication_keeps_the_plane(seed in any::<u64>(), n in 1usize..7, r in 0usize..7) {
        let mut g = rng(seed);
        let ic = random_interface(n, r.min(n), &mut g, tol()).unwrap();
        let q = random_invertible(n, &mut g);
        let other = ic.transformed(&q, &CMatrix::identity(n, n), tol()).unwrap();
        prop_assert_eq!(other.rank_b(), ic.rank_b());
        prop_assert_eq!(coupling_codim(&ic, &other, tol()).unwrap(), 0);
    }

    #[test]
    fn renumbering_keeps_mixing(seed in any::<u64>(), n in 2usize..7, r in 1usize..7) {
        let mut g = rng(seed);
        let ic = random_interface(n, r.min(n), &mut g, tol()).unwrap();
        let p = permutation_matrix(&random_permutation(n, &mut g));
        let moved = ic.transformed(&CMatrix::identity(n, n), &p, tol()).unwrap();
        prop_assert!(satisfies_d4(&moved, tol()).unwrap());
        prop_assert_eq!(moved.rank_b(), ic.rank_b());
    }

    #[test]
    fn normal_form_reproduces_the_condition(seed in any::<u64>(), n in 1usize..7, r in 0usize..7) {
        let ic = random_interface(n, r.min(n), &mut rng(seed), tol()).unwrap();
        let nf = to_normal_form(&ic, tol()).unwrap();
        let res = nf.reproduction_residual(&ic);
        prop_assert!(res < 1e-9, "residual {res:e}");
        let mut sorted = nf.permutation.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), n in 1usize..6, r in 0usize..6) {
        let ic = random_interface(n, r.min(n), &mut rng(seed), tol()).unwrap();
        let text = serde_json::to_string(&ic.to_json()).unwrap();
        let back = InterfaceCondition::from_json_str(&text, tol()).unwrap();
        prop_assert_eq!(back.to_json(), ic.to_json());
    }

    #[test]
    fn codim_is_symmetric_and_bounded(seed in any::<u64>(), n in 1usize..6) {
        let mut g = rng(seed);
        let r1 = g.random_range(0..=n);
        let r2 = g.random_range(0..=n);
        let a = random_interface(n, r1, &mut g, tol()).unwrap();
        let b = random_interface(n, r2, &mut g, tol()).unwrap();
        let ab = coupling_codim(&a, &b, tol()).unwrap();
        prop_assert_eq!(ab, coupling_codim(&b, &a, tol()).unwrap());
        prop_assert!(ab <= n);
        prop_assert_eq!(coupling_codim(&a, &a, tol()).unwrap(), 0);
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn reduce_rank_postconditions(seed in any::<u64>(), n in 2usize..6, r_frac in 0.0f64..=1.0, k_frac in 0.0f64..=1.0) {
        let r = 1 + (((n - 1) as f64) * r_frac).round() as usize;
        let k = 1 + (((r - 1) as f64) * k_frac).round() as usize;
        let ic = random_interface(n, r, &mut rng(seed), tol()).unwrap();
        let reduced = reduce_rank(&ic, k, tol(), seed).unwrap();
        prop_assert_eq!(reduced.rank_b(), k);
        prop_assert!(satisfies_d4(&reduced, tol()).unwrap());
        prop_assert!(self_adjointness_residual(reduced.a(), reduced.b()) < 1e-10);
        prop_assert_eq!(coupling_codim(&ic, &reduced, tol()).unwrap(), r - k);
    }

    #[test]
    fn reduce_rank_is_deterministic(seed in any::<u64>()) {
        let ic = random_interface(4, 3, &mut rng(seed), tol()).unwrap();
        let a = reduce_rank(&ic, 1, tol(), seed).unwrap();
        let b = reduce_rank(&ic, 1, tol(), seed).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn edge_weyl_function_is_herglotz(length in 0.3f64..5.0, re in -30.0f64..30.0, im in 1e-3f64..10.0) {
        let edge = &EdgeSpec::dirichlet(length);
        let z = c64(re, im);
        let m = eval_m_edge(edge, z).unwrap();
        let mc = eval_m_edge(edge, z.conj()).unwrap();
        prop_assert!(m.im > 0.0, "Im m = {:e} at {z}", m.im);
        prop_assert!((mc - m.conj()).norm() <= 1e-12 * m.norm().max(1.0));
    }

    #[test]
    fn shooting_matches_closed_form(length in 0.3f64..3.0, re in -10.0f64..20.0, im in 0.05f64..5.0) {
        let edge = &EdgeSpec::dirichlet(length);
        let z = c64(re, im);
        let exact = eval_m_edge(edge, z).unwrap();
        let shot = eval_m_edge_shooting(edge, z).unwrap();
        prop_assert!((exact - shot).norm() <= 1e-6 * exact.norm().max(1.0), "{exact} vs {shot}");
    }

    #[test]
    fn coupled_weyl_function_is_matrix_herglotz(
        seed in any::<u64>(), n in 2usize..5, re in -20.0f64..20.0, im in 0.01f64..5.0,
    ) {
        let mut g = rng(seed);
        let r = g.random_range(0..=n);
        let ic = random_interface(n, r, &mut g, tol()).unwrap();
        let lengths: Vec<f64> = (0..n).map(|_| g.random_range(0.5..3.0)).collect();
        let graph = StarGraph::dirichlet(&lengths).unwrap();
        let sample = eval_mw(&graph, &ic, c64(re, im), tol()).unwrap();
        let scale = sample.mw.norm().max(1.0);
        prop_assert!(min_hermitian_eigenvalue(&sample.im_mw) >= -1e-9 * scale);
        prop_assert!(sample.trace_im > 0.0);
    }
}
