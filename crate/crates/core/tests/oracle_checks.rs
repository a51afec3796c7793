use diamond_heat::fractal::heat_trace;
use diamond_heat::oracle::{build_graph, WalkStart};
use diamond_heat::{Exec, ParameterSequences};

const TOL: f64 = 1e-12;

#[test]
fn graph_density_converges_to_closed_form_at_second_order() {
    let s = ParameterSequences::new(vec![2, 3], vec![3, 2]).unwrap();
    for level in [1, 2] {
        let l = s.arc_length(level);
        let errs: Vec<f64> = [8.0, 16.0]
            .iter()
            .map(|&div| {
                let g = build_graph(&s, level, l / div).unwrap();
                let spec = g.spectrum().unwrap();
                g.compare_with_kernel(&s, &spec, 0.2, TOL, Exec::default())
                    .unwrap()
                    .relative
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(errs[1] < 0.02, "level {level}: {errs:?}");
        assert!((3.0..=5.0).contains(&ratio), "level {level}: ratio {ratio}");
    }
}

#[test]
fn graph_trace_approaches_predicted_trace() {
    let s = ParameterSequences::constant(2, 2, 2).unwrap();
    for level in [1, 2] {
        let g = build_graph(&s, level, s.arc_length(level) / 32.0).unwrap();
        let spec = g.spectrum().unwrap();
        for &t in &[0.2, 1.0] {
            let (a, b) = (spec.heat_trace(t), heat_trace(&s, level, t).unwrap());
            assert!((a - b).abs() < 5e-3 * b, "level {level} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn walkers_follow_the_matrix_exponential() {
    let s = ParameterSequences::constant(2, 2, 1).unwrap();
    let g = build_graph(&s, 1, s.arc_length(1) / 16.0).unwrap();
    let spec = g.spectrum().unwrap();
    let x = g.interior_node(0, 5);
    let walkers = 40_000;
    let t = 0.3;
    let run = g
        .random_walk(t, WalkStart::Node(x), walkers, 7, Exec::default())
        .unwrap();
    let dens = spec.density_matrix(t).unwrap();
    assert!((g.total_mass() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    let expected: Vec<f64> = (0..g.len()).map(|y| dens[(x, y)] * g.mass[y]).collect();
    let mut worst: f64 = 0.0;
    for (&p, &count) in expected.iter().zip(&run.node_counts) {
        let observed = count as f64 / walkers as f64;
        let sigma = (p * (1.0 - p) / walkers as f64).sqrt().max(1e-6);
        worst = worst.max((observed - p).abs() / sigma);
    }
    assert!(worst < 5.0, "worst deviation {worst} sigma");
}

#[test]
fn walks_do_not_depend_on_execution_mode() {
    let s = ParameterSequences::constant(2, 2, 1).unwrap();
    let g = build_graph(&s, 1, s.arc_length(1) / 8.0).unwrap();
    let a = g
        .random_walk(0.2, WalkStart::Stationary, 2000, 3, Exec::Sequential)
        .unwrap();
    let b = g
        .random_walk(0.2, WalkStart::Stationary, 2000, 3, Exec::default())
        .unwrap();
    assert_eq!(a, b);
}
