mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use twist_green::blocktri::BlockTridiagonal;
use twist_green::rng::stream;
use twist_green::selftest::random_symmetric;
use twist_green::twist::forward;
use twist_green::variational::{
    action, check_strong_min, config_to_orbit, hessian_fixed_ends, mane_potential, minimize_fixed_ends,
    minimize_periodic, Configuration, MultiStart,
};
use twist_green::{AnnulusPoint, GeneratingFunction};

fn v1(x: f64) -> DVector<f64> {
    DVector::from_vec(vec![x])
}

#[test]
fn action_matches_resummation() {
    let s = GeneratingFunction::standard(1.0);
    let mut rng = stream(2, 0);
    let pts: Vec<DVector<f64>> = (0..12).map(|_| v1(rng.random_range(-2.0..2.0))).collect();
    let want: f64 = pts.windows(2).map(|w| s.eval(&w[0], &w[1]) - 0.1).sum();
    let got = action(&s, &Configuration::fixed(pts), 0.1);
    assert!((got - want).abs() < 1e-14);
}

#[test]
fn integrable_fixed_ends_are_equally_spaced() {
    let s = GeneratingFunction::integrable(1);
    let c = minimize_fixed_ends(&s, &v1(0.0), &v1(1.0), 4, None).unwrap();
    for (i, p) in c.points.iter().enumerate() {
        assert!((p[0] - i as f64 / 4.0).abs() < 1e-12);
    }
    let orbit = config_to_orbit(&s, &c).unwrap();
    assert!(orbit.points.iter().all(|x| (x.p[0] - 0.25).abs() < 1e-12));
}

#[test]
fn hyperbolic_point_is_a_constant_minimizer() {
    let s = GeneratingFunction::standard(0.5);
    let c = minimize_fixed_ends(&s, &v1(0.5), &v1(0.5), 10, None).unwrap();
    assert!(c.points.iter().all(|p| (p[0] - 0.5).abs() < 1e-10));
    let h = hessian_fixed_ends(&s, &c).unwrap();
    assert!(h.min_eigenvalue > 0.0);
    assert!(h.transverse);
}

#[test]
fn laplacian_spectrum() {
    let s = GeneratingFunction::integrable(1);
    for k in [3usize, 7, 20] {
        let pts = (0..=k).map(|i| v1(0.1 * i as f64)).collect();
        let h = hessian_fixed_ends(&s, &Configuration::fixed(pts)).unwrap();
        let want = 2.0 - 2.0 * (std::f64::consts::PI / k as f64).cos();
        assert!((h.min_eigenvalue - want).abs() < 1e-10, "k={k}");
    }
}

#[test]
fn periodic_minimizers() {
    let s = GeneratingFunction::integrable(1);
    let m = minimize_periodic(&s, &[1], 2, None, &MultiStart::default()).unwrap();
    assert!((m.mean_action - 0.125).abs() < 1e-12);
    let eps = 1.0;
    let s = GeneratingFunction::standard(eps);
    let m = minimize_periodic(&s, &[0], 1, None, &MultiStart::default()).unwrap();
    assert!((m.config.points[0][0].rem_euclid(1.0) - 0.5).abs() < 1e-10);
    assert!((m.mean_action + eps / (4.0 * std::f64::consts::PI.powi(2))).abs() < 1e-12);
    let m2 = minimize_periodic(&s, &[0], 2, None, &MultiStart::default()).unwrap();
    assert!(m.mean_action >= m2.mean_action - 1e-10);
}

#[test]
fn strong_minimality_spots_the_maximum() {
    let s = GeneratingFunction::standard(1.0);
    let lbar = -1.0 / (4.0 * std::f64::consts::PI.powi(2));
    let mut rng = stream(9, 0);
    let top = Configuration::periodic(vec![v1(0.0)], vec![0]);
    assert!(!check_strong_min(&s, &top, lbar, 500, &mut rng).unwrap().is_ok());
    let bottom = Configuration::periodic(vec![v1(0.5)], vec![0]);
    assert!(check_strong_min(&s, &bottom, lbar, 500, &mut rng).unwrap().is_ok());
}

#[test]
fn potential_superdifferentials_follow_the_orbit() {
    let s = GeneratingFunction::standard(0.9);
    let mut rng = stream(4, 0);
    for m in [1usize, 3, 6] {
        let x = v1(rng.random_range(0.0..1.0));
        let y = v1(rng.random_range(0.0..1.5));
        let r = mane_potential(&s, &x, &y, m, 0.0).unwrap();
        let mut z = AnnulusPoint::new(x.clone(), -r.super_x.clone());
        for _ in 0..m {
            z = forward(&s, &z).unwrap();
        }
        assert!((z.q[0] - y[0]).abs() < 1e-8 && (z.p[0] - r.super_y[0]).abs() < 1e-8);
    }
}

#[test]
fn blocktri_matches_dense() {
    let mut rng = stream(31, 0);
    for (blocks, n) in [(5usize, 1usize), (4, 2), (6, 3)] {
        let diag: Vec<DMatrix<f64>> = (0..blocks)
            .map(|_| random_symmetric(&mut rng, n, 1.0) + DMatrix::identity(n, n) * 4.0)
            .collect();
        let upper: Vec<DMatrix<f64>> = (0..blocks - 1)
            .map(|_| DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let t = BlockTridiagonal::new(diag, upper);
        let dense = t.to_dense();
        let want = dense.clone().symmetric_eigen().eigenvalues.min();
        assert!((t.min_eigenvalue() - want).abs() < 1e-9);
        let rhs: Vec<DVector<f64>> = (0..blocks).map(|i| DVector::from_element(n, i as f64 - 1.0)).collect();
        let sol = t.solve_shifted(0.0, &rhs).unwrap();
        let flat_sol = DVector::from_iterator(blocks * n, sol.iter().flat_map(|v| v.iter().copied()));
        let flat_rhs = DVector::from_iterator(blocks * n, rhs.iter().flat_map(|v| v.iter().copied()));
        assert!((&dense * flat_sol - flat_rhs).norm() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn triangle_inequality(x in 0.0f64..1.0, y in -1.0f64..2.0, z in -1.0f64..2.0, m in 1usize..4, m2 in 1usize..4) {
        let s = GeneratingFunction::standard(0.7);
        let a = mane_potential(&s, &v1(x), &v1(y), m, 0.0).unwrap().value;
        let b = mane_potential(&s, &v1(y), &v1(z), m2, 0.0).unwrap().value;
        let c = mane_potential(&s, &v1(x), &v1(z), m + m2, 0.0).unwrap().value;
        prop_assert!(c <= a + b + 1e-8);
    }

    #[test]
    fn integrable_potential_closed_form(x in -1.0f64..1.0, y in -1.0f64..1.0, m in 1usize..=20) {
        let s = GeneratingFunction::integrable(1);
        let r = mane_potential(&s, &v1(x), &v1(y), m, 0.0).unwrap();
        prop_assert!((r.value - (y - x).powi(2) / (2.0 * m as f64)).abs() < 1e-9);
    }
}
