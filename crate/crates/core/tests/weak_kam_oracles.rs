mod common;

use nalgebra::DVector;
use twist_green::rng::stream;
use twist_green::weak_kam::{
    calibration_defect, conjugate_pair, estimate_lbar, lax_oleinik_backward, lax_oleinik_forward, solve_calibrated,
    subaction_violation, Kind, SubactionGrid,
};
use twist_green::GeneratingFunction;

fn bumpy(n: usize, res: usize) -> SubactionGrid {
    SubactionGrid::from_fn(n, res, Kind::Backward, |x| {
        x.iter()
            .enumerate()
            .map(|(i, v)| (6.0 * v + i as f64).sin() * 0.3)
            .sum::<f64>()
    })
}

#[test]
fn backward_step_matches_enumeration() {
    for (s, n, res) in [
        (GeneratingFunction::standard(0.5), 1, 64),
        (GeneratingFunction::standard(1.4), 1, 37),
        (GeneratingFunction::froeschle(0.3, 0.4, 0.1), 2, 8),
    ] {
        let u = bumpy(n, res);
        let got = lax_oleinik_backward(&s, &u, 0.01);
        let want = common::naive_backward(&s, &u, 0.01);
        for (a, b) in got.values.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn forward_step_matches_enumeration() {
    let s = GeneratingFunction::standard(0.9);
    let u = bumpy(1, 50);
    let got = lax_oleinik_forward(&s, &u, -0.02);
    let want = common::naive_forward(&s, &u, -0.02);
    for (a, b) in got.values.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn integrable_solution_is_flat() {
    let s = GeneratingFunction::integrable(1);
    let u = solve_calibrated(&s, Kind::Backward, 0.0, 64, 1e-12, 100).unwrap();
    assert!(u.max() < 1e-12);
}

#[test]
fn calibrated_pair_on_the_standard_map() {
    let s = GeneratingFunction::standard(0.8);
    let lbar = estimate_lbar(&s, 3).unwrap().lbar;
    assert!((lbar + 0.8 / (4.0 * std::f64::consts::PI.powi(2))).abs() < 1e-10);
    let u = solve_calibrated(&s, Kind::Backward, lbar, 96, 1e-9, 10_000).unwrap();
    assert!(calibration_defect(&s, &u, lbar) < 1e-8);
    let mut rng = stream(5, 0);
    assert!(subaction_violation(&s, &u, lbar, 2000, &mut rng) <= 1e-8);
    let pair = conjugate_pair(&s, &u, lbar, 1e-9, 10_000).unwrap();
    assert!(pair.order_defect <= 1e-8);
    let half = u.nearest_node(&DVector::from_vec(vec![0.5]));
    assert!(pair.coincidence.contains(&half));
}
