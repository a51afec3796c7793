//! Acceptance run: one PASS/FAIL line per criterion. Tolerances, parameters
//! and runtime limits are fixed here.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use diamond_heat::{Exec, ParameterSequences};
use diamond_heat_cli::verify::{self, Check, SuiteReport};

const SEED: u64 = 20_240_611;
const TOL: f64 = 1e-12;

fn binary(depth: usize) -> ParameterSequences {
    ParameterSequences::constant(2, 2, depth).unwrap()
}

fn mixed() -> ParameterSequences {
    ParameterSequences::new(vec![2, 3, 2, 2], vec![3, 2, 2, 2]).unwrap()
}

fn ternary(depth: usize) -> ParameterSequences {
    ParameterSequences::constant(3, 3, depth).unwrap()
}

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Duration,
    run: fn() -> Result<Vec<Check>, String>,
}

fn checks(
    reports: Vec<diamond_heat::Result<SuiteReport>>,
    tags: &[&str],
) -> Result<Vec<Check>, String> {
    let mut out = Vec::new();
    for (r, tag) in reports.into_iter().zip(tags) {
        let r = r.map_err(|e| format!("{tag}: {e}"))?;
        out.extend(r.checks.into_iter().map(|mut c| {
            if !tag.is_empty() {
                c.name = format!("{tag} {}", c.name);
            }
            c
        }));
    }
    Ok(out)
}

fn kernel_methods() -> Result<Vec<Check>, String> {
    checks(
        vec![verify::kernel_methods(TOL, &[1e-4, 1e-2, 1.0, 10.0], 32)],
        &[""],
    )
}

fn identity() -> Result<Vec<Check>, String> {
    checks(
        vec![
            verify::classical_identity(&binary(4), 4, 250, SEED, 1e-12),
            verify::classical_identity(&mixed(), 4, 250, SEED, 1e-12),
        ],
        &["(2,2)", "mixed"],
    )
}

fn symmetry() -> Result<Vec<Check>, String> {
    let times = [0.05, 0.5, 2.0];
    checks(
        vec![
            verify::symmetry(&binary(4), 4, 1000, SEED, &times, TOL),
            verify::symmetry(&mixed(), 4, 1000, SEED, &times, TOL),
        ],
        &["(2,2)", "mixed"],
    )
}

fn mass() -> Result<Vec<Check>, String> {
    let plan = [
        (0, 512, 1e-6),
        (1, 512, 1e-6),
        (2, 512, 1e-6),
        (3, 128, 1e-4),
    ];
    checks(
        vec![
            verify::mass(&binary(3), &plan, 4, SEED, TOL, Exec::default()),
            verify::mass(&mixed(), &plan, 4, SEED, TOL, Exec::default()),
        ],
        &["(2,2)", "mixed"],
    )
}

fn chapman() -> Result<Vec<Check>, String> {
    checks(
        vec![verify::chapman(
            &binary(2),
            &[0, 1, 2],
            &[64, 128, 256],
            0.25,
            0.25,
            TOL,
            Exec::default(),
        )],
        &[""],
    )
}

fn decomposition() -> Result<Vec<Check>, String> {
    checks(
        vec![verify::decomposition(
            &binary(2),
            1,
            &[32, 64, 128],
            0.25,
            TOL,
            Exec::default(),
        )],
        &[""],
    )
}

fn bound() -> Result<Vec<Check>, String> {
    let times = [0.05, 0.5, 2.0];
    checks(
        vec![
            verify::bound(&binary(4), 4, 1000, SEED, &times, TOL),
            verify::bound(&mixed(), 4, 1000, SEED, &times, TOL),
        ],
        &["(2,2)", "mixed"],
    )
}

fn stabilization() -> Result<Vec<Check>, String> {
    checks(
        vec![
            verify::stabilization(&binary(4), 4, 1000, SEED, 0.3, TOL),
            verify::stabilization(&mixed(), 4, 1000, SEED, 0.3, TOL),
        ],
        &["(2,2)", "mixed"],
    )
}

fn oracle() -> Result<Vec<Check>, String> {
    checks(
        vec![
            verify::oracle(&binary(1), 0.1, &[64.0, 128.0], TOL, Exec::default()),
            verify::oracle(&ternary(1), 0.1, &[64.0, 128.0], TOL, Exec::default()),
        ],
        &["(2,2)", "(3,3)"],
    )
}

fn schrodinger() -> Result<Vec<Check>, String> {
    checks(
        vec![verify::schrodinger(&binary(1), 1e-2, 0.3, 256.0, TOL)],
        &[""],
    )
}

fn monte_carlo() -> Result<Vec<Check>, String> {
    checks(
        vec![verify::monte_carlo(
            &binary(1),
            0.5,
            100_000,
            64.0,
            SEED,
            256,
            TOL,
            Exec::default(),
        )],
        &[""],
    )
}

fn dimension() -> Result<Vec<Check>, String> {
    let dim = |j: &str, n: &str| -> Result<f64, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_diamond-heat"))
            .args(["dim", "--j", j, "--n", n])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        let v: serde_json::Value =
            serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        v["dimension"]
            .as_f64()
            .ok_or_else(|| "no dimension field".to_string())
    };
    let exact = |name: &str, value: f64, target: f64| {
        let mut c = Check::between(name, value, target, target);
        c.passed = value == target;
        c
    };
    Ok(vec![
        exact("dim(2,2)", dim("2", "2")?, 2.0),
        exact("dim(2,4)", dim("2", "4")?, 3.0),
    ])
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: 1,
            title: "spectral and image sums agree",
            limit: secs(5),
            run: kernel_methods,
        },
        Criterion {
            id: 2,
            title: "Dirichlet kernel as reflected circle kernel",
            limit: secs(5),
            run: identity,
        },
        Criterion {
            id: 3,
            title: "symmetry and positivity",
            limit: secs(30),
            run: symmetry,
        },
        Criterion {
            id: 4,
            title: "mass conservation",
            limit: secs(120),
            run: mass,
        },
        Criterion {
            id: 5,
            title: "Chapman-Kolmogorov",
            limit: secs(120),
            run: chapman,
        },
        Criterion {
            id: 6,
            title: "symmetric/antisymmetric decomposition",
            limit: secs(60),
            run: decomposition,
        },
        Criterion {
            id: 7,
            title: "uniform bound on level differences",
            limit: secs(60),
            run: bound,
        },
        Criterion {
            id: 8,
            title: "stabilization past the common bundle",
            limit: secs(60),
            run: stabilization,
        },
        Criterion {
            id: 9,
            title: "graph matrix-exponential oracle",
            limit: secs(180),
            run: oracle,
        },
        Criterion {
            id: 10,
            title: "Schrodinger kernel against oracle",
            limit: secs(180),
            run: schrodinger,
        },
        Criterion {
            id: 11,
            title: "random-walk cell occupancy",
            limit: secs(180),
            run: monte_carlo,
        },
        Criterion {
            id: 12,
            title: "Hausdorff dimension command",
            limit: secs(60),
            run: dimension,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let (ok, detail) = match &result {
            Ok(checks) => (
                checks.iter().all(|k| k.passed),
                checks
                    .iter()
                    .map(|k| {
                        let mark = if k.passed { "" } else { " FAILED" };
                        let note = k
                            .note
                            .as_deref()
                            .map(|n| format!(" [{n}]"))
                            .unwrap_or_default();
                        let bounds = match (k.lower, k.upper) {
                            (Some(a), Some(b)) if a == b => format!(" = {a}"),
                            (Some(a), Some(b)) => format!(" in [{a}, {b}]"),
                            (None, Some(b)) => format!(" <= {b:e}"),
                            (Some(a), None) => format!(" >= {a:e}"),
                            (None, None) => String::new(),
                        };
                        format!("{}={:.3e}{bounds}{mark}{note}", k.name, k.value)
                    })
                    .collect::<Vec<_>>()
                    .join("; "),
            ),
            Err(e) => (false, format!("error: {e}")),
        };
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {} ({:.2} s, limit {} s{}) :: {}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.title,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            if in_time { "" } else { ", TOO SLOW" },
            detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
