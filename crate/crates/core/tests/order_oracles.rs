mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use twist_green::geometry::modified_green;
use twist_green::green::GreenData;
use twist_green::rng::stream;
use twist_green::selftest::{
    check_absorption, check_converse, check_interleaving, check_invariance, check_transitivity, random_spectrum,
    random_symmetric,
};
use twist_green::symplectic::{between_witness_graphs, c0, compare_under_vertical, Relation};
use twist_green::{AnnulusPoint, LagrangianFrame};

#[test]
fn between_matches_projection_oracle() {
    let mut rng = stream(404, 0);
    let (mut decided, mut tried) = (0, 0);
    while decided < 60 {
        tried += 1;
        assert!(tried < 1000, "oracle too often ambiguous");
        let n = 1 + tried % 3;
        let (v, wm, wp) = common::between_instance(&mut rng, n);
        let Some(want) = common::between_oracle(&v, &wm, &wp) else {
            continue;
        };
        decided += 1;
        let got = between_witness_graphs(&v, &wm, &wp).unwrap();
        assert_eq!(got.is_some(), want, "n={n} v={v} wm={wm} wp={wp}");
        if let Some(w) = got {
            let a = v.rows(0, n).into_owned();
            let b = v.rows(n, n).into_owned();
            assert!((&w * &a - b).norm() < 1e-9 * (1.0 + w.norm()));
            let lo = (&w - &wm).symmetric_eigen().eigenvalues.min();
            let hi = (&wp - &w).symmetric_eigen().eigenvalues.min();
            assert!(lo > -1e-9 && hi > -1e-9);
        }
    }
}

#[test]
fn between_degenerate_vectors() {
    let wm = DMatrix::from_row_slice(1, 1, &[-1.0]);
    let wp = DMatrix::from_row_slice(1, 1, &[1.0]);
    let zero = DVector::zeros(2);
    assert!(between_witness_graphs(&zero, &wm, &wp).unwrap().is_some());
    let vertical = DVector::from_vec(vec![0.0, 1.0]);
    assert!(between_witness_graphs(&vertical, &wm, &wp).unwrap().is_none());
    assert_eq!(common::between_oracle(&vertical, &wm, &wp), Some(false));
    let edge = DVector::from_vec(vec![1.0, 1.0]);
    assert!(between_witness_graphs(&edge, &wm, &wp).unwrap().is_some());
}

#[test]
fn graphs_compare_by_their_matrices() {
    let mut rng = stream(17, 1);
    for n in 1..=3 {
        let w = random_symmetric(&mut rng, n, 1.0);
        let d = random_spectrum(&mut rng, n, 0.1, 1.0);
        let lo = LagrangianFrame::graph(w.clone()).unwrap();
        let hi = LagrangianFrame::graph(&w + &d).unwrap();
        assert_eq!(
            compare_under_vertical(&lo, &hi).unwrap().relation,
            Relation::StrictlyUnder
        );
        assert_eq!(
            compare_under_vertical(&hi, &lo).unwrap().relation,
            Relation::Incomparable
        );
        assert_eq!(compare_under_vertical(&lo, &lo).unwrap().relation, Relation::Under);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_properties_hold(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = stream(seed, 0);
        prop_assert!(check_invariance(&mut r, n).is_ok());
        prop_assert!(check_absorption(&mut r, n, 1e-9).is_ok());
        prop_assert!(check_interleaving(&mut r, n, 1e-9).is_ok());
        prop_assert!(check_converse(&mut r, n, 1e-9).is_ok());
        prop_assert!(check_transitivity(&mut r, n, 1e-9).is_ok());
    }

    #[test]
    fn modified_green_brackets_the_pair(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = stream(seed, 1);
        let sm = random_symmetric(&mut r, n, 1.0);
        let ds = random_spectrum(&mut r, n, 0.0, 2.0);
        let g = GreenData {
            base: AnnulusPoint::new(DVector::zeros(n), DVector::zeros(n)),
            index: 0,
            s_minus: sm.clone(),
            s_plus: &sm + &ds,
            delta_s: ds.clone(),
            p_dim: 0,
            q_plus_val: None,
            k_used: 1,
            extrapolated: false,
            achieved_tol: 0.0,
            rank_cutoff: 0.0,
        };
        let (lo, hi) = modified_green(&g);
        let below = (&sm - &lo).symmetric_eigen().eigenvalues.min();
        let above = (&hi - &sm - &ds).symmetric_eigen().eigenvalues.min();
        prop_assert!(below >= -1e-12 && above >= -1e-12);
        prop_assert!(((&hi - &lo) - &ds * (1.0 + 2.0 * c0())).norm() < 1e-12);
    }
}
