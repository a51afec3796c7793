use diamond_heat::params::hausdorff_dimension;
use diamond_heat::ParameterSequences;
use proptest::prelude::*;

proptest! {
    #[test]
    fn config_round_trips(j in prop::collection::vec(2u64..50, 0..6), seed in any::<u64>()) {
        let n: Vec<u64> = j.iter().enumerate().map(|(k, _)| 2 + (seed >> (k * 3)) % 5).collect();
        let s = ParameterSequences::new(j, n).unwrap();
        let text = serde_json::to_string(&s.to_config()).unwrap();
        prop_assert_eq!(ParameterSequences::from_json(&text).unwrap(), s);
    }

    #[test]
    fn cumulative_products_multiply(j in prop::collection::vec(2u64..9, 1..8), n in 2u64..9) {
        let s = ParameterSequences::new(j.clone(), vec![n; j.len()]).unwrap();
        for l in 1..=s.depth() {
            prop_assert_eq!(s.big_j(l), s.big_j(l - 1) * j[l - 1] as u128);
            prop_assert_eq!(s.big_n(l), (n as u128).pow(l as u32));
            prop_assert!((s.arc_length(l) * s.big_j(l) as f64 - std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_grows_with_branching(j in 2u64..40, n in 2u64..40) {
        let d = hausdorff_dimension(j, n).unwrap();
        prop_assert!(d > 1.0);
        prop_assert!(hausdorff_dimension(j, n + 1).unwrap() > d);
        prop_assert!(hausdorff_dimension(j + 1, n).unwrap() < d);
    }
}

#[test]
fn powers_of_a_common_base_give_exact_dimensions() {
    assert_eq!(hausdorff_dimension(2, 2).unwrap(), 2.0);
    assert_eq!(hausdorff_dimension(2, 4).unwrap(), 3.0);
    assert_eq!(hausdorff_dimension(4, 8).unwrap(), 2.5);
    assert_eq!(hausdorff_dimension(9, 27).unwrap(), 2.5);
}

#[test]
fn constant_branching_satisfies_the_assumption() {
    let s = ParameterSequences::constant(3, 5, 6).unwrap();
    let r = s.check_assumption(0.01, 6).unwrap();
    assert!(r.ok && r.time_independent_ok);
}
