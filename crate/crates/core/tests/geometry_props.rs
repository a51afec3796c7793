use diamond_heat::geometry::{
    classify_pair, deepest_common_bundle, enumerate_cells, label_code, labels_from_code, locate,
    project, sample_point_seeded, Address, LocatedChain, PairConfig,
};
use diamond_heat::ParameterSequences;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ParameterSequences> {
    (1usize..=4)
        .prop_flat_map(|d| {
            (
                prop::collection::vec(2u64..=4, d),
                prop::collection::vec(2u64..=3, d),
            )
        })
        .prop_map(|(j, n)| ParameterSequences::new(j, n).unwrap())
}

fn params_and_pair() -> impl Strategy<Value = (ParameterSequences, Address, Address)> {
    (params(), any::<u64>(), any::<u64>(), any::<bool>()).prop_map(|(s, a, b, near)| {
        let d = s.depth();
        let x = sample_point_seeded(&s, a, d).unwrap();
        let mut y = sample_point_seeded(&s, b, d).unwrap();
        if near {
            y.eta = x.eta;
        }
        (s, x, y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projections_compose((s, x, _y) in params_and_pair(), a in 0usize..5, b in 0usize..5) {
        let (k, l) = (a.min(b), a.max(b));
        prop_assert_eq!(project(&project(&x, l), k), project(&x, k));
        let _ = s;
    }

    #[test]
    fn located_angle_reassembles((s, x, _y) in params_and_pair()) {
        for level in 0..=s.depth() {
            let c = locate(&s, &x, level).unwrap();
            let back = c.cell.base(&s).radians() + c.theta.radians();
            prop_assert!((back - x.eta.radians()).abs() < 1e-12);
            prop_assert!(c.theta.radians() >= 0.0);
            let len = if level == 0 { 2.0 * std::f64::consts::PI } else { s.arc_length(level) };
            prop_assert!(c.theta.radians() < len + 1e-15);
        }
    }

    #[test]
    fn classification_is_symmetric((s, x, y) in params_and_pair()) {
        for level in 0..=s.depth() {
            prop_assert_eq!(
                classify_pair(&s, &x, &y, level).unwrap(),
                classify_pair(&s, &y, &x, level).unwrap()
            );
        }
    }

    #[test]
    fn separation_is_permanent((s, x, y) in params_and_pair()) {
        let mut separated = false;
        for level in 1..=s.depth() {
            let c = classify_pair(&s, &x, &y, level).unwrap();
            if separated {
                prop_assert_eq!(c, PairConfig::DifferentBundle);
            }
            if c != PairConfig::SameStrand {
                separated = true;
            }
        }
    }

    #[test]
    fn chain_bundle_matches_scan((s, x, y) in params_and_pair()) {
        let d = s.depth();
        let cx = LocatedChain::new(&s, &x, d).unwrap();
        let cy = LocatedChain::new(&s, &y, d).unwrap();
        prop_assert_eq!(
            cx.common_bundle(&cy, d).unwrap(),
            deepest_common_bundle(&s, &x, &y, d).unwrap()
        );
    }

    #[test]
    fn label_codes_invert(s in params(), seed in any::<u64>()) {
        let d = s.depth();
        let x = sample_point_seeded(&s, seed, d).unwrap();
        let code = label_code(&s, &x.branches);
        prop_assert!(code < s.big_n(d));
        prop_assert_eq!(labels_from_code(&s, d, code), x.branches);
    }
}

#[test]
fn cell_count_is_twice_j_times_n() {
    let s = ParameterSequences::new(vec![2, 3, 2], vec![3, 2, 2]).unwrap();
    for level in 0..=3 {
        let cells = enumerate_cells(&s, level).unwrap();
        let expect = if level == 0 {
            1
        } else {
            2 * s.big_j(level) * s.big_n(level)
        };
        assert_eq!(cells.len() as u128, expect);
        let mut sorted = cells.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), cells.len());
    }
}

#[test]
fn every_sampled_point_lands_in_an_enumerated_cell() {
    let s = ParameterSequences::new(vec![2, 2], vec![2, 3]).unwrap();
    let cells = enumerate_cells(&s, 2).unwrap();
    for seed in 0..200 {
        let x = sample_point_seeded(&s, seed, 2).unwrap();
        let c = locate(&s, &x, 2).unwrap().cell;
        assert!(cells.binary_search(&c).is_ok());
    }
}
