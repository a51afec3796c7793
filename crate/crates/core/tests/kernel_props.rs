use std::f64::consts::PI;

use approx::assert_relative_eq;
use diamond_heat::fractal::{
    heat_kernel_level, heat_kernel_level_recursive, heat_kernel_limit, schrodinger_kernel,
    uniform_bound,
};
use diamond_heat::geometry::{deepest_common_bundle, sample_point_seeded, Address};
use diamond_heat::kernel1d::{
    circle_kernel, circle_kernel_complex, dirichlet_kernel, ComplexTime, EvalOptions, Method,
};
use diamond_heat::ParameterSequences;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn opts(method: Method) -> EvalOptions {
    EvalOptions::with_tol(TOL).with_method(method)
}

fn binary(depth: usize) -> ParameterSequences {
    ParameterSequences::constant(2, 2, depth).unwrap()
}

fn mixed() -> ParameterSequences {
    ParameterSequences::new(vec![2, 3, 2, 2], vec![3, 2, 2, 2]).unwrap()
}

fn log_time() -> impl Strategy<Value = f64> {
    (-4.0f64..1.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn circle_series_agree(t in log_time(), a in 0.0..2.0 * PI, b in 0.0..2.0 * PI) {
        let s = circle_kernel(t, a, b, &opts(Method::Spectral)).unwrap();
        let i = circle_kernel(t, a, b, &opts(Method::Images)).unwrap();
        prop_assert!((s - i).abs() <= 2.0 * TOL, "t={t} spectral={s} images={i}");
    }

    #[test]
    fn dirichlet_series_agree(t in log_time(), l in 0.05..PI, u in 0.0..1.0, v in 0.0..1.0) {
        let (a, b) = (u * l, v * l);
        let s = dirichlet_kernel(t, l, a, b, &opts(Method::Spectral)).unwrap();
        let i = dirichlet_kernel(t, l, a, b, &opts(Method::Images)).unwrap();
        prop_assert!((s - i).abs() <= 2.0 * TOL, "t={t} L={l} spectral={s} images={i}");
    }

    #[test]
    fn dirichlet_is_odd_reflection_of_scaled_circle(
        t in log_time(), big_j in prop::sample::select(vec![1.0, 2.0, 4.0, 8.0, 16.0]),
        u in 0.0..1.0, v in 0.0..1.0,
    ) {
        let l = PI / big_j;
        let (a, b) = (u * l, v * l);
        let o = EvalOptions::with_tol(TOL);
        let d = dirichlet_kernel(t, l, a, b, &o).unwrap();
        let s = big_j * t * big_j;
        let c = big_j
            * (circle_kernel(s, big_j * a, big_j * b, &o).unwrap()
                - circle_kernel(s, big_j * a, -big_j * b, &o).unwrap());
        prop_assert!((d - c).abs() <= 2.0 * TOL * (1.0 + big_j), "d={d} c={c}");
    }

    #[test]
    fn one_dimensional_kernels_are_symmetric_and_nonnegative(
        t in log_time(), a in 0.0..PI, b in 0.0..PI,
    ) {
        let o = EvalOptions::default();
        let c1 = circle_kernel(t, a, b, &o).unwrap();
        prop_assert!((c1 - circle_kernel(t, b, a, &o).unwrap()).abs() <= 1e-13 * c1.abs().max(1.0));
        prop_assert!(c1 >= -TOL);
        let d1 = dirichlet_kernel(t, PI, a, b, &o).unwrap();
        prop_assert!((d1 - dirichlet_kernel(t, PI, b, a, &o).unwrap()).abs() <= 1e-13 * d1.abs().max(1.0));
        prop_assert!(d1 >= -TOL);
        prop_assert!(d1 <= c1 + c1.abs() * 1e-12 + 2.0 * TOL);
    }

    #[test]
    fn complex_circle_kernel_is_conjugate_symmetric(
        eps in 0.01..1.0f64, t in -3.0..3.0f64, a in 0.0..2.0 * PI, b in 0.0..2.0 * PI,
    ) {
        let o = EvalOptions::default();
        let p = circle_kernel_complex(ComplexTime::new(eps, t), a, b, &o).unwrap();
        let q = circle_kernel_complex(ComplexTime::new(eps, -t), a, b, &o).unwrap();
        prop_assert!((p - q.conj()).norm() < 1e-12);
    }
}

#[test]
fn circle_kernel_has_unit_mass() {
    let o = EvalOptions::default();
    for &t in &[1e-2, 0.3, 4.0] {
        let m = 4000;
        let h = 2.0 * PI / m as f64;
        let mass: f64 = (0..m)
            .map(|k| circle_kernel(t, 1.0, (k as f64 + 0.5) * h, &o).unwrap())
            .sum::<f64>()
            * h;
        assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
    }
}

#[test]
fn dirichlet_kernel_loses_mass() {
    let o = EvalOptions::default();
    let l = PI / 4.0;
    let m = 2000;
    let h = l / m as f64;
    let mut last = 1.0;
    for &t in &[1e-3, 1e-2, 0.1] {
        let mass: f64 = (0..m)
            .map(|k| dirichlet_kernel(t, l, l / 2.0, (k as f64 + 0.5) * h, &o).unwrap())
            .sum::<f64>()
            * h;
        assert!(mass < last && mass > 0.0);
        last = mass;
    }
}

fn random_pairs(s: &ParameterSequences, count: u64) -> Vec<(Address, Address)> {
    let d = s.depth();
    (0..count)
        .map(|k| {
            let x = sample_point_seeded(s, 2 * k, d).unwrap();
            let mut y = sample_point_seeded(s, 2 * k + 1, d).unwrap();
            if k % 2 == 0 {
                let shift = (k as f64 * 0.37).sin() * 0.5 * s.arc_length(d);
                y.eta = diamond_heat::Angle::real((x.eta.radians() + shift).rem_euclid(2.0 * PI))
                    .unwrap();
            }
            (x, y)
        })
        .collect()
}

#[test]
fn level_kernels_are_symmetric_and_positive() {
    for s in [binary(4), mixed()] {
        for (x, y) in random_pairs(&s, 100) {
            for &t in &[0.05, 0.5, 2.0] {
                for level in 0..=4 {
                    let p = heat_kernel_level(&s, level, &x, &y, t, TOL).unwrap().value;
                    let q = heat_kernel_level(&s, level, &y, &x, t, TOL).unwrap().value;
                    assert!((p - q).abs() < 1e-10);
                    assert!(p > -1e-10, "p={p} at level {level}, t={t}");
                }
            }
        }
    }
}

#[test]
fn unrolled_sum_matches_recursion() {
    let s = mixed();
    for (x, y) in random_pairs(&s, 60) {
        for level in 0..=4 {
            let a = heat_kernel_level(&s, level, &x, &y, 0.2, TOL)
                .unwrap()
                .value;
            let b = heat_kernel_level_recursive(&s, level, &x, &y, 0.2, TOL).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn successive_levels_respect_uniform_bound() {
    for s in [binary(4), mixed()] {
        for (x, y) in random_pairs(&s, 200) {
            for &t in &[0.05, 0.5, 2.0] {
                let mut prev = heat_kernel_level(&s, 0, &x, &y, t, TOL).unwrap().value;
                for level in 1..=4 {
                    let p = heat_kernel_level(&s, level, &x, &y, t, TOL).unwrap().value;
                    let bound = uniform_bound(&s, level, t).unwrap();
                    assert!((p - prev).abs() <= bound + 2.0 * TOL, "level {level} t={t}");
                    prev = p;
                }
            }
        }
    }
}

#[test]
fn kernel_stabilizes_past_common_bundle() {
    let s = mixed();
    for (x, y) in random_pairs(&s, 200) {
        let star = deepest_common_bundle(&s, &x, &y, 4).unwrap();
        let reference = heat_kernel_level(&s, star.level, &x, &y, 0.3, TOL).unwrap();
        for level in star.level..=4 {
            let r = heat_kernel_level(&s, level, &x, &y, 0.3, TOL).unwrap();
            assert_eq!(r.value.to_bits(), reference.value.to_bits());
        }
        let lim = heat_kernel_limit(&s, &x, &y, 0.3, TOL).unwrap();
        if !star.saturated {
            assert_eq!(lim.tail_bound, 0.0);
            assert_eq!(lim.value.to_bits(), reference.value.to_bits());
        }
    }
}

#[test]
fn schrodinger_kernel_conjugates_under_time_reversal() {
    let s = binary(3);
    for (x, y) in random_pairs(&s, 40) {
        let p = schrodinger_kernel(&s, &x, &y, 0.7, Some(0.05), 1e-9);
        let q = schrodinger_kernel(&s, &x, &y, -0.7, Some(0.05), 1e-9);
        match (p, q) {
            (Ok(p), Ok(q)) => {
                assert!((p.value - q.value.conj()).norm() < 1e-12);
                let r = schrodinger_kernel(&s, &y, &x, 0.7, Some(0.05), 1e-9).unwrap();
                assert!((p.value - r.value).norm() < 1e-12);
            }
            (Err(_), Err(_)) => {}
            other => panic!("time reversal changed solvability: {other:?}"),
        }
    }
}
