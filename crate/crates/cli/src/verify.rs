//! Verification suites behind `diamond-heat verify`.
//!
//! Every suite returns a table of named checks with the measured value and
//! the limits it was held to.

use std::f64::consts::PI;
use std::time::Instant;

use clap::ValueEnum;
use diamond_heat::fractal::{heat_kernel_level, heat_kernel_limit, uniform_bound, LevelKernels};
use diamond_heat::geometry::{deepest_common_bundle, sample_point, LocatedChain};
use diamond_heat::kernel1d::{
    circle_kernel, CircleKernel, ComplexTime, DirichletKernel, EvalOptions, Method,
};
use diamond_heat::oracle::{build_graph, WalkStart};
use diamond_heat::semigroup::{
    apply_semigroup_at, check_chapman_kolmogorov_with, check_decomposition_with,
    check_intertwining, GridField, GridLayout,
};
use diamond_heat::{Address, Angle, Exec, ParameterSequences, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Kernel,
    Identity,
    Symmetry,
    Mass,
    Chapman,
    Decomposition,
    Intertwining,
    Bound,
    Stabilization,
    Oracle,
    Schrodinger,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: None,
            upper: Some(upper),
            passed: value <= upper,
            note: None,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: Some(lower),
            upper: None,
            passed: value >= lower,
            note: None,
        }
    }

    pub fn between(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: Some(lower),
            upper: Some(upper),
            passed: (lower..=upper).contains(&value),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub elapsed_s: f64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn finish(suite: Suite, start: Instant, checks: Vec<Check>) -> Self {
        Self {
            suite,
            passed: checks.iter().all(|c| c.passed),
            elapsed_s: start.elapsed().as_secs_f64(),
            checks,
        }
    }

    /// Plain-text residual table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "suite {:?}: {} ({:.2} s)\n",
            self.suite,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed_s
        );
        for c in &self.checks {
            let lo = c.lower.map(|v| format!("{v:.3e} <= ")).unwrap_or_default();
            let hi = c.upper.map(|v| format!(" <= {v:.3e}")).unwrap_or_default();
            out.push_str(&format!(
                "  [{}] {}: {lo}{:.3e}{hi}{}\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.note
                    .as_deref()
                    .map(|n| format!(" ({n})"))
                    .unwrap_or_default()
            ));
        }
        out
    }
}

/// Run `suite` with its standard settings on `seq`.
pub fn run_suite(
    suite: Suite,
    seq: &ParameterSequences,
    tol: f64,
    seed: u64,
    exec: Exec,
) -> Result<SuiteReport> {
    let d = seq.depth();
    match suite {
        Suite::Kernel => kernel_methods(1e-12, &[1e-4, 1e-2, 1.0, 10.0], 32),
        Suite::Identity => classical_identity(seq, d.min(4), 200, seed, 1e-12),
        Suite::Symmetry => symmetry(seq, d.min(4), 1000, seed, &[0.05, 0.5, 2.0], tol),
        Suite::Mass => {
            let plan: Vec<(usize, usize, f64)> = (0..=d.min(3))
                .map(|i| {
                    if i <= 2 {
                        (i, 512, 1e-6)
                    } else {
                        (i, 128, 1e-4)
                    }
                })
                .collect();
            mass(seq, &plan, 4, seed, tol, exec)
        }
        Suite::Chapman => chapman(
            seq,
            &(0..=d.min(2)).collect::<Vec<_>>(),
            &[64, 128, 256],
            0.25,
            0.25,
            tol,
            exec,
        ),
        Suite::Decomposition => decomposition(seq, 1, &[32, 64, 128], 0.25, tol, exec),
        Suite::Intertwining => intertwining(seq, 128, 0.3, tol),
        Suite::Bound => bound(seq, d.min(4), 1000, seed, &[0.05, 0.5, 2.0], tol),
        Suite::Stabilization => stabilization(seq, d.min(4), 1000, seed, 0.3, tol),
        Suite::Oracle => oracle(seq, 0.1, &[64.0, 128.0], tol, exec),
        Suite::Schrodinger => schrodinger(seq, 1e-2, 0.3, 256.0, tol),
        Suite::MonteCarlo => monte_carlo(seq, 0.5, 100_000, 64.0, seed, 256, tol, exec),
    }
}

/// Random pairs with uniform angles and labels up to `depth`; every other
/// pair is moved into a common arc so that corrections are exercised.
pub fn random_pairs(
    seq: &ParameterSequences,
    count: usize,
    seed: u64,
    depth: usize,
) -> Result<Vec<(Address, Address)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = seq.arc_length(depth);
    (0..count)
        .map(|k| {
            let x = sample_point(seq, &mut rng, depth)?;
            let mut y = sample_point(seq, &mut rng, depth)?;
            if k % 2 == 0 {
                let shift = (rng.random::<f64>() - 0.5) * span;
                y.eta = Angle::real(x.eta.radians() + shift)?;
            }
            Ok((x, y))
        })
        .collect()
}

/// Spectral against image summation of the circle and Dirichlet kernels.
pub fn kernel_methods(tol: f64, times: &[f64], grid: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let spectral = EvalOptions::with_tol(tol).with_method(Method::Spectral);
    let images = EvalOptions::with_tol(tol).with_method(Method::Images);
    let mut checks = Vec::new();
    for &t in times {
        let (cs, ci) = (
            CircleKernel::new(t, &spectral)?,
            CircleKernel::new(t, &images)?,
        );
        let angle = |a: usize| 2.0 * PI * (a as f64 + 0.25) / grid as f64;
        let mut worst: f64 = 0.0;
        for a in 0..grid {
            for b in 0..grid {
                worst =
                    worst.max((cs.eval(angle(a), angle(b)) - ci.eval(angle(a), angle(b))).abs());
            }
        }
        checks.push(Check::at_most(format!("circle, t={t:e}"), worst, 2.0 * tol));
        for l in [PI, PI / 8.0] {
            let ds = DirichletKernel::new(t, l, &spectral)?;
            let di = DirichletKernel::new(t, l, &images)?;
            let angle = |a: usize| l * a as f64 / (grid - 1) as f64;
            let mut worst: f64 = 0.0;
            for a in 0..grid {
                for b in 0..grid {
                    let d = ds.eval(angle(a), angle(b))? - di.eval(angle(a), angle(b))?;
                    worst = worst.max(d.abs());
                }
            }
            checks.push(Check::at_most(
                format!("dirichlet L={l:.4}, t={t:e}"),
                worst,
                2.0 * tol,
            ));
        }
    }
    Ok(SuiteReport::finish(Suite::Kernel, start, checks))
}

/// The Dirichlet kernel of a level-`i` cell against the odd reflection of
/// the rescaled circle kernel.
pub fn classical_identity(
    seq: &ParameterSequences,
    max_level: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for level in 1..=max_level {
        let big_j = seq.big_j(level) as f64;
        let l = seq.arc_length(level);
        let dir_opts = EvalOptions::with_tol(tol / 3.0);
        let circ_opts = EvalOptions::with_tol(tol / (3.0 * big_j));
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let t = 10f64.powf(rng.random_range(-3.0..1.0));
            let (a, b) = (rng.random::<f64>() * l, rng.random::<f64>() * l);
            let d = diamond_heat::kernel1d::dirichlet_kernel(t, l, a, b, &dir_opts)?;
            let s = big_j * big_j * t;
            let c = big_j
                * (circle_kernel(s, big_j * a, big_j * b, &circ_opts)?
                    - circle_kernel(s, big_j * a, -big_j * b, &circ_opts)?);
            worst = worst.max((d - c).abs());
        }
        checks.push(Check::at_most(format!("level {level}"), worst, tol));
    }
    Ok(SuiteReport::finish(Suite::Identity, start, checks))
}

fn chains(
    seq: &ParameterSequences,
    pairs: &[(Address, Address)],
    cap: usize,
) -> Result<Vec<(LocatedChain, LocatedChain)>> {
    pairs
        .iter()
        .map(|(x, y)| {
            Ok((
                LocatedChain::new(seq, x, cap)?,
                LocatedChain::new(seq, y, cap)?,
            ))
        })
        .collect()
}

/// `|p(x,y) - p(y,x)|` and the smallest value over random pairs.
pub fn symmetry(
    seq: &ParameterSequences,
    max_level: usize,
    pairs: usize,
    seed: u64,
    times: &[f64],
    tol: f64,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let pairs = random_pairs(seq, pairs, seed, max_level)?;
    let located = chains(seq, &pairs, max_level)?;
    let mut asym: f64 = 0.0;
    let mut lowest = f64::INFINITY;
    for &t in times {
        for level in 0..=max_level {
            let k = LevelKernels::new(seq, t, level, tol)?;
            for (cx, cy) in &located {
                let p = k.eval_chains(cx, cy, level)?;
                let q = k.eval_chains(cy, cx, level)?;
                asym = asym.max((p - q).abs());
                lowest = lowest.min(p.min(q));
            }
        }
    }
    let checks = vec![
        Check::at_most("max |p(x,y) - p(y,x)|", asym, 1e-10),
        Check::at_least("min p(x,y)", lowest, -1e-10),
    ];
    Ok(SuiteReport::finish(Suite::Symmetry, start, checks))
}

/// `∫ p_t(x, ·) dμ_i` by the midpoint rule; `plan` lists
/// `(level, nodes per cell, tolerance)`.
pub fn mass(
    seq: &ParameterSequences,
    plan: &[(usize, usize, f64)],
    points: usize,
    seed: u64,
    tol: f64,
    exec: Exec,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for &(level, m, limit) in plan {
        let one = GridField::constant(&GridLayout::new(seq, level, m)?, 1.0);
        let xs = (0..points)
            .map(|_| sample_point(seq, &mut rng, level))
            .collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for &t in &[0.05, 0.5] {
            for v in apply_semigroup_at(seq, &one, &xs, t, tol, exec)? {
                worst = worst.max((v - 1.0).abs());
            }
        }
        checks.push(Check::at_most(
            format!("level {level}, m={m}"),
            worst,
            limit,
        ));
    }
    Ok(SuiteReport::finish(Suite::Mass, start, checks))
}

/// Below this both residuals of a refinement step are roundoff and their
/// ratio carries no information.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Chapman–Kolmogorov residuals for each level and grid size, and their
/// decay under refinement.
pub fn chapman(
    seq: &ParameterSequences,
    levels: &[usize],
    ms: &[usize],
    t: f64,
    s: f64,
    tol: f64,
    exec: Exec,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut checks = Vec::new();
    for &level in levels {
        let residuals = ms
            .iter()
            .map(|&m| Ok(check_chapman_kolmogorov_with(seq, level, t, s, m, tol, exec)?.residual))
            .collect::<Result<Vec<f64>>>()?;
        for (k, &m) in ms.iter().enumerate() {
            checks.push(Check::at_most(
                format!("level {level}, m={m}"),
                residuals[k],
                1e-4,
            ));
        }
        for k in 1..ms.len() {
            checks.push(refinement_check(
                format!("level {level}, decay m={} -> {}", ms[k - 1], ms[k]),
                residuals[k - 1],
                residuals[k],
                3.5,
                f64::INFINITY,
            ));
        }
    }
    Ok(SuiteReport::finish(Suite::Chapman, start, checks))
}

fn refinement_check(name: String, coarse: f64, fine: f64, lower: f64, upper: f64) -> Check {
    let ratio = coarse / fine;
    if coarse <= ROUNDOFF_FLOOR && fine <= ROUNDOFF_FLOOR {
        let mut c = Check::between(name, ratio, lower, upper);
        c.passed = true;
        return c.with_note(format!(
            "residuals {coarse:.1e} and {fine:.1e} are below the roundoff floor {ROUNDOFF_FLOOR:e}"
        ));
    }
    Check::between(name, ratio, lower, upper)
}

/// A field with both a bundle-symmetric and an antisymmetric part.
pub fn decomposition_field(seq: &ParameterSequences, level: usize, m: usize) -> Result<GridField> {
    let centre = (seq.n(level) as f64 + 1.0) / 2.0;
    Ok(GridField::from_fn(
        seq,
        &GridLayout::new(seq, level, m)?,
        |eta, w| {
            eta.cos()
                + 0.5 * (2.0 * eta).sin() * (w[level - 1] as f64 - centre)
                + 0.3 * (3.0 * eta).cos()
        },
    ))
}

pub fn decomposition(
    seq: &ParameterSequences,
    level: usize,
    ms: &[usize],
    t: f64,
    tol: f64,
    exec: Exec,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let residuals = ms
        .iter()
        .map(|&m| {
            let f = decomposition_field(seq, level, m)?;
            Ok(check_decomposition_with(seq, &f, t, tol, exec)?.residual)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut checks = Vec::new();
    let last = ms.len() - 1;
    checks.push(Check::at_most(
        format!("level {level}, m={}", ms[last]),
        residuals[last],
        1e-3,
    ));
    for k in 1..ms.len() {
        checks.push(refinement_check(
            format!("decay m={} -> {}", ms[k - 1], ms[k]),
            residuals[k - 1],
            residuals[k],
            3.0,
            5.0,
        ));
    }
    Ok(SuiteReport::finish(Suite::Decomposition, start, checks))
}

/// Lifting a coarse field and evolving it against evolving and lifting.
pub fn intertwining(seq: &ParameterSequences, m: usize, t: f64, tol: f64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut checks = Vec::new();
    let f0 = GridField::from_fn(seq, &GridLayout::new(seq, 0, m)?, |eta, _| eta.cos());
    checks.push(Check::at_most(
        "cos η from level 0 to 1",
        check_intertwining(seq, 1, &f0, t, m, tol)?,
        1e-3,
    ));
    if seq.depth() >= 2 {
        let f1 = GridField::from_fn(seq, &GridLayout::new(seq, 1, m)?, |eta, w| {
            eta.sin() * w[0] as f64
        });
        checks.push(Check::at_most(
            "w₁ sin η from level 1 to 2",
            check_intertwining(seq, 2, &f1, t, m, tol)?,
            1e-3,
        ));
    }
    Ok(SuiteReport::finish(Suite::Intertwining, start, checks))
}

/// `|p^{F_i} - p^{F_{i-1}}|` against the uniform bound.
pub fn bound(
    seq: &ParameterSequences,
    max_level: usize,
    pairs: usize,
    seed: u64,
    times: &[f64],
    tol: f64,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let pairs = random_pairs(seq, pairs, seed, max_level)?;
    let located = chains(seq, &pairs, max_level)?;
    let mut violations = 0usize;
    let mut worst_ratio: f64 = 0.0;
    for &t in times {
        let kernels = (0..=max_level)
            .map(|i| LevelKernels::new(seq, t, i, tol))
            .collect::<Result<Vec<_>>>()?;
        for level in 1..=max_level {
            let b = uniform_bound(seq, level, t)?;
            for (cx, cy) in &located {
                let diff = (kernels[level].eval_chains(cx, cy, level)?
                    - kernels[level - 1].eval_chains(cx, cy, level - 1)?)
                .abs();
                // each level is accurate to tol, so allow both truncations
                if diff > b + 2.0 * tol {
                    violations += 1;
                }
                if b > 0.0 {
                    worst_ratio = worst_ratio.max(diff / b);
                }
            }
        }
    }
    let checks = vec![
        Check::at_most("violations", violations as f64, 0.0),
        Check::at_most("max |difference| / bound", worst_ratio, f64::INFINITY),
    ];
    Ok(SuiteReport::finish(Suite::Bound, start, checks))
}

/// Level kernels past the deepest common bundle are bit-identical, and the
/// limit kernel of a separating pair carries no tail.
pub fn stabilization(
    seq: &ParameterSequences,
    max_level: usize,
    pairs: usize,
    seed: u64,
    t: f64,
    tol: f64,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let pairs = random_pairs(seq, pairs, seed, max_level)?;
    let mut mismatches = 0usize;
    let mut tails = 0usize;
    let mut separating = 0usize;
    for (x, y) in &pairs {
        let star = deepest_common_bundle(seq, x, y, max_level)?;
        let reference = heat_kernel_level(seq, star.level, x, y, t, tol)?.value;
        for level in star.level..=max_level {
            if heat_kernel_level(seq, level, x, y, t, tol)?.value.to_bits() != reference.to_bits() {
                mismatches += 1;
            }
        }
        if !star.saturated {
            separating += 1;
            let lim = heat_kernel_limit(seq, x, y, t, tol)?;
            if lim.tail_bound != 0.0 || lim.value.to_bits() != reference.to_bits() {
                tails += 1;
            }
        }
    }
    let checks = vec![
        Check::at_most("levels differing from level i_*", mismatches as f64, 0.0),
        Check::at_most("separating pairs with a nonzero tail", tails as f64, 0.0)
            .with_note(format!("{separating} separating pairs")),
    ];
    Ok(SuiteReport::finish(Suite::Stabilization, start, checks))
}

/// Matrix-exponential density of the discretized `F_1` against the closed
/// form, at `h = L_1 / div` for each entry of `divs`.
pub fn oracle(
    seq: &ParameterSequences,
    t: f64,
    divs: &[f64],
    tol: f64,
    exec: Exec,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let l = seq.arc_length(1);
    let errors = divs
        .iter()
        .map(|&div| {
            let g = build_graph(seq, 1, l / div)?;
            let spec = g.spectrum()?;
            Ok(g.compare_with_kernel(seq, &spec, t, tol, exec)?.relative)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut checks = vec![Check::at_most(
        format!("relative error, h=L/{}", divs[0]),
        errors[0],
        0.01,
    )];
    for k in 1..divs.len() {
        checks.push(Check::at_most(
            format!("relative error, h=L/{}", divs[k]),
            errors[k],
            0.01,
        ));
        checks.push(Check::between(
            format!("error ratio L/{} -> L/{}", divs[k - 1], divs[k]),
            errors[k - 1] / errors[k],
            3.0,
            5.0,
        ));
    }
    Ok(SuiteReport::finish(Suite::Oracle, start, checks))
}

/// Regularized Schrödinger kernel on `F_1` against `exp(-(ε+it) M⁻¹K)`.
pub fn schrodinger(
    seq: &ParameterSequences,
    eps: f64,
    t: f64,
    div: f64,
    tol: f64,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let g = build_graph(seq, 1, seq.arc_length(1) / div)?;
    let spec = g.spectrum()?;
    let x = g.interior_node(0, g.segments / 3);
    let rel = g.compare_complex_with_kernel(seq, &spec, ComplexTime::new(eps, t), x, tol)?;
    let forward = LevelKernels::new_complex(seq, ComplexTime::new(eps, t), 1, tol)?;
    let backward = LevelKernels::new_complex(seq, ComplexTime::new(eps, -t), 1, tol)?;
    let cx = LocatedChain::new(seq, g.address(x), 1)?;
    let mut conj: f64 = 0.0;
    let mut swap: f64 = 0.0;
    for y in 0..g.len() {
        let cy = LocatedChain::new(seq, g.address(y), 1)?;
        let p = forward.eval_chains(&cx, &cy, 1)?;
        conj = conj.max((p - backward.eval_chains(&cx, &cy, 1)?.conj()).norm());
        swap = swap.max((p - forward.eval_chains(&cy, &cx, 1)?).norm());
    }
    let checks = vec![
        Check::at_most(format!("relative l2 error, h=L/{div}"), rel, 0.02),
        Check::at_most("max |ψ(t) - conj ψ(-t)|", conj, 1e-12),
        Check::at_most("max |ψ(x,y) - ψ(y,x)|", swap, 1e-12),
    ];
    Ok(SuiteReport::finish(Suite::Schrodinger, start, checks))
}

/// Per-cell occupancy of a random-walk population on `F_1` against the
/// cell masses of the closed-form kernel.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    seq: &ParameterSequences,
    t: f64,
    walkers: usize,
    div: f64,
    seed: u64,
    quad_m: usize,
    tol: f64,
    exec: Exec,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let g = build_graph(seq, 1, seq.arc_length(1) / div)?;
    let x = g.interior_node(0, g.segments / 3);
    let run = g.random_walk(t, WalkStart::Node(x), walkers, seed, exec)?;
    let again = g.random_walk(t, WalkStart::Node(x), walkers, seed, Exec::Sequential)?;
    let same_bytes = serde_json::to_vec(&run).expect("serializable")
        == serde_json::to_vec(&again).expect("serializable");

    let layout = GridLayout::new(seq, 1, quad_m)?;
    let kernels = LevelKernels::new(seq, t, 1, tol)?;
    let cx = LocatedChain::new(seq, g.address(x), 1)?;
    let nodes = layout.node_chains(seq, exec)?;
    let w = layout.weight();
    let mut z_max: f64 = 0.0;
    let mut total = 0.0;
    for cell in 0..layout.cells() {
        let mut p = 0.0;
        for r in 0..quad_m {
            p += kernels.eval_chains(&cx, &nodes[cell * quad_m + r], 1)? * w;
        }
        total += p;
        let observed = run.cell_counts[cell] as f64 / walkers as f64;
        let sigma = (p * (1.0 - p) / walkers as f64).sqrt();
        z_max = z_max.max((observed - p).abs() / sigma);
    }
    let checks = vec![
        Check::at_most("max |occupancy - cell mass| / σ", z_max, 4.0),
        Check::at_most("|Σ cell masses - 1|", (total - 1.0).abs(), 1e-6),
        Check::at_least(
            "reruns byte-identical",
            if same_bytes { 1.0 } else { 0.0 },
            1.0,
        ),
    ];
    Ok(SuiteReport::finish(Suite::MonteCarlo, start, checks))
}
