//! Command-line front end for `diamond-heat`.
//!
//! Scalars are written as JSON and fields as CSV. Every output carries the
//! resolved run configuration: a `config` object in JSON, a leading
//! `# config {...}` line in CSV.

pub mod address;
pub mod verify;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use diamond_heat::fractal::{
    default_regularization, heat_kernel_level, heat_kernel_limit, schrodinger_kernel,
    schrodinger_kernel_level, tail_sum, uniform_bound, LevelKernels,
};
use diamond_heat::geometry::LocatedChain;
use diamond_heat::kernel1d::ComplexTime;
use diamond_heat::params::{hausdorff_dimension, ParamsConfig};
use diamond_heat::semigroup::{
    apply_semigroup_at, apply_semigroup_with, read_csv, write_csv, GridField, GridLayout,
};
use diamond_heat::{Address, Exec, ParameterSequences};
use serde::Serialize;
use serde_json::{json, Value};

pub use address::parse_address;

/// Parameters used when `--params` is absent.
pub const DEFAULT_PARAMS: &str = r#"{"j_const":2,"n_const":2,"depth":4}"#;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] diamond_heat::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 3 for configuration errors, 4 for capacity errors (including limit
    /// evaluations whose certified tail exceeds the tolerance).
    pub fn exit_code(&self) -> i32 {
        use diamond_heat::Error as E;
        match self {
            CliError::Library(E::Capacity(_) | E::InsufficientDepth { .. }) => 4,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "diamond-heat",
    version,
    about = "Heat kernels on diamond fractals"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Branching parameters: a JSON file or inline JSON, either
    /// {"j":[..],"n":[..]} or {"j_const":J,"n_const":N,"depth":D}.
    #[arg(long, global = true)]
    pub params: Option<String>,
    /// Level of the lattice F_i.
    #[arg(long, global = true)]
    pub level: Option<usize>,
    /// Evaluate on the limit space instead of a finite level.
    #[arg(long, global = true)]
    pub limit: bool,
    /// Time(s), comma separated where a list is accepted.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Vec<f64>,
    /// Regularization ε of the Schrödinger kernel (default 1e-3·|t|).
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Absolute truncation tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially. Defaults to the available parallelism.
    #[arg(long, global = true, env = "DIAMOND_HEAT_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel value at one pair of points.
    Eval {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// CSV of p_t(x, ·) over the nodes of a level grid, for each time.
    Grid {
        #[arg(long)]
        x: String,
        /// Nodes per cell.
        #[arg(long, default_value_t = 16)]
        m: usize,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
    },
    /// Evolve an initial field by the heat semigroup.
    Solve {
        /// Initial field as CSV (the format written by `solve`).
        #[arg(long, conflicts_with_all = ["constant", "cosine"])]
        u0: Option<PathBuf>,
        /// Constant initial field.
        #[arg(long)]
        constant: Option<f64>,
        /// Initial field cos(k η).
        #[arg(long)]
        cosine: Option<u32>,
        /// Nodes per cell for --constant and --cosine.
        #[arg(long, default_value_t = 32)]
        m: usize,
        /// Evaluate at these points (JSON output) instead of the grid nodes.
        #[arg(long = "at")]
        at: Vec<String>,
    },
    /// Free Schrödinger kernel ψ = p_{ε+it}.
    Schrodinger {
        #[arg(long)]
        x: String,
        /// Second point; without it the kernel is swept over the grid nodes.
        #[arg(long)]
        y: Option<String>,
        #[arg(long, default_value_t = 16)]
        m: usize,
    },
    /// Hausdorff dimension 1 + log n / log j.
    Dim {
        #[arg(long)]
        j: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Uniform bound on successive level differences and its tail.
    Bound {
        /// Levels inspected by the standing-assumption check.
        #[arg(long)]
        horizon: Option<usize>,
    },
}

/// Output of a command and whether it passed (only `verify` can fail).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, passed: true }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            2
        }
    }
}

/// Parse arguments, run, write the output and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli).and_then(|outcome| {
        emit(&cli.global.out, &outcome.text)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Run the command inside a worker pool of the requested size.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let exec = match cli.global.workers {
        Some(0) => return Err(CliError::Config("--workers must be at least 1".into())),
        Some(1) => Exec::Sequential,
        _ => Exec::default(),
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.global.workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
        return pool.install(|| run(cli, exec));
    }
    run(cli, exec)
}

/// Inline JSON or a path to a JSON file.
pub fn load_params(source: Option<&str>) -> Result<ParameterSequences, CliError> {
    let text = match source {
        None => DEFAULT_PARAMS.to_string(),
        Some(s) if s.trim_start().starts_with('{') => s.to_string(),
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: PathBuf::from(path),
            source,
        })?,
    };
    Ok(ParameterSequences::from_json(&text)?)
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    resolved_params: ParamsConfig,
    #[serde(flatten)]
    global: &'a GlobalArgs,
    #[serde(skip_serializing_if = "Value::is_null")]
    args: Value,
}

struct Ctx<'a> {
    cli: &'a Cli,
    seq: ParameterSequences,
    exec: Exec,
}

impl Ctx<'_> {
    fn g(&self) -> &GlobalArgs {
        &self.cli.global
    }

    fn config(&self, command: &'static str, args: Value) -> Value {
        serde_json::to_value(RunConfig {
            command,
            resolved_params: self.seq.to_config(),
            global: self.g(),
            args,
        })
        .expect("serializable")
    }

    fn json(&self, command: &'static str, args: Value, mut body: Value) -> String {
        body.as_object_mut()
            .expect("object body")
            .insert("config".into(), self.config(command, args));
        serde_json::to_string_pretty(&body).expect("serializable") + "\n"
    }

    fn csv_head(&self, command: &'static str, args: Value) -> String {
        format!("# config {}\n", self.config(command, args))
    }

    fn single_t(&self) -> Result<f64, CliError> {
        match self.g().t.as_slice() {
            [t] => Ok(*t),
            [] => Err(CliError::Config("--t is required".into())),
            _ => Err(CliError::Config("this command takes a single --t".into())),
        }
    }

    /// `(level, limit)` from `--level` / `--limit`.
    fn level(&self) -> Result<(usize, bool), CliError> {
        match (self.g().level, self.g().limit) {
            (Some(_), true) => Err(CliError::Config("use either --level or --limit".into())),
            (Some(i), false) => {
                self.seq.check_level(i)?;
                Ok((i, false))
            }
            (None, true) => Ok((self.seq.depth(), true)),
            (None, false) => Err(CliError::Config(
                "one of --level or --limit is required".into(),
            )),
        }
    }
}

fn run(cli: &Cli, exec: Exec) -> Result<Outcome, CliError> {
    if let Command::Dim { j, n } = &cli.command {
        return cmd_dim(cli, *j, *n);
    }
    let seq = load_params(cli.global.params.as_deref())?;
    let ctx = Ctx { cli, seq, exec };
    match &cli.command {
        Command::Eval { x, y } => cmd_eval(&ctx, x, y),
        Command::Grid { x, m } => cmd_grid(&ctx, x, *m),
        Command::Verify { suite } => cmd_verify(&ctx, *suite),
        Command::Solve {
            u0,
            constant,
            cosine,
            m,
            at,
        } => cmd_solve(&ctx, u0.as_deref(), *constant, *cosine, *m, at),
        Command::Schrodinger { x, y, m } => cmd_schrodinger(&ctx, x, y.as_deref(), *m),
        Command::Bound { horizon } => cmd_bound(&ctx, *horizon),
        Command::Dim { .. } => unreachable!("handled above"),
    }
}

fn cmd_eval(ctx: &Ctx, x: &str, y: &str) -> Result<Outcome, CliError> {
    let (xa, ya) = (parse_address(x)?, parse_address(y)?);
    let (level, limit) = ctx.level()?;
    let args = json!({ "x": xa, "y": ya });
    let tol = ctx.g().tol;
    let body = match ctx.g().eps {
        Some(eps) => {
            let t = ctx.single_t()?;
            let r = if limit {
                schrodinger_kernel(&ctx.seq, &xa, &ya, t, Some(eps), tol)?
            } else {
                schrodinger_kernel_level(&ctx.seq, level, &xa, &ya, t, eps, tol)?
            };
            json!({
                "re": r.value.re, "im": r.value.im, "abs2": r.value.norm_sqr(),
                "tail_bound": r.tail_bound, "i_star": r.i_star, "levels_used": r.levels_used,
                "saturated": r.saturated, "corrections": r.correction_trace,
            })
        }
        None => {
            let t = ctx.single_t()?;
            let r = if limit {
                heat_kernel_limit(&ctx.seq, &xa, &ya, t, tol)?
            } else {
                heat_kernel_level(&ctx.seq, level, &xa, &ya, t, tol)?
            };
            json!({
                "value": r.value, "tail_bound": r.tail_bound, "i_star": r.i_star,
                "levels_used": r.levels_used, "saturated": r.saturated,
                "corrections": r.correction_trace,
            })
        }
    };
    Ok(Outcome::ok(ctx.json("eval", args, body)))
}

fn cmd_grid(ctx: &Ctx, x: &str, m: usize) -> Result<Outcome, CliError> {
    let xa = parse_address(x)?;
    let (level, limit) = ctx.level()?;
    if ctx.g().t.is_empty() {
        return Err(CliError::Config("--t is required".into()));
    }
    let layout = GridLayout::new(&ctx.seq, level, m)?;
    let mut out = ctx.csv_head("grid", json!({ "x": xa, "m": m }));
    out.push_str("t,cell,theta,value\n");
    let nodes = layout.node_chains(&ctx.seq, ctx.exec)?;
    let addresses = (0..layout.len())
        .map(|k| layout.node_address(&ctx.seq, k))
        .collect::<Result<Vec<_>, _>>()?;
    for &t in &ctx.g().t {
        let values: Vec<f64> = if limit {
            ctx.exec
                .map(addresses.len(), |k| {
                    heat_kernel_limit(&ctx.seq, &xa, &addresses[k], t, ctx.g().tol).map(|r| r.value)
                })
                .into_iter()
                .collect::<Result<_, _>>()?
        } else {
            let kernels = LevelKernels::new(&ctx.seq, t, level, ctx.g().tol)?;
            let cx = diamond_heat::fractal::chain_at_level(&ctx.seq, &xa, level)?;
            ctx.exec
                .map(nodes.len(), |k| kernels.eval_chains(&cx, &nodes[k], level))
                .into_iter()
                .collect::<Result<_, _>>()?
        };
        for (k, v) in values.iter().enumerate() {
            let (cell, r) = (k / m, k % m);
            let _ = writeln!(
                out,
                "{t},{},{},{v}",
                layout.cell_name(&ctx.seq, cell),
                layout.theta(r)
            );
        }
    }
    Ok(Outcome::ok(out))
}

fn cmd_verify(ctx: &Ctx, suite: verify::Suite) -> Result<Outcome, CliError> {
    let report = verify::run_suite(suite, &ctx.seq, ctx.g().tol, ctx.g().seed, ctx.exec)?;
    eprint!("{}", report.table());
    let body = serde_json::to_value(&report).expect("serializable");
    Ok(Outcome {
        text: ctx.json("verify", json!({ "suite": suite }), body),
        passed: report.passed,
    })
}

fn cmd_solve(
    ctx: &Ctx,
    u0: Option<&Path>,
    constant: Option<f64>,
    cosine: Option<u32>,
    m: usize,
    at: &[String],
) -> Result<Outcome, CliError> {
    let t = ctx.single_t()?;
    let field = match (u0, constant, cosine) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            read_csv(&ctx.seq, &text)?
        }
        (None, Some(c), None) => {
            let (level, _) = ctx.level()?;
            GridField::constant(&GridLayout::new(&ctx.seq, level, m)?, c)
        }
        (None, None, Some(k)) => {
            let (level, _) = ctx.level()?;
            GridField::from_fn(&ctx.seq, &GridLayout::new(&ctx.seq, level, m)?, |eta, _| {
                (k as f64 * eta).cos()
            })
        }
        _ => {
            return Err(CliError::Config(
                "give exactly one of --u0, --constant, --cosine".into(),
            ))
        }
    };
    let args = json!({
        "u0": u0, "constant": constant, "cosine": cosine,
        "grid_level": field.level(), "m": field.layout.m,
    });
    let tol = ctx.g().tol;
    if at.is_empty() {
        let u = apply_semigroup_with(&ctx.seq, &field, t, tol, ctx.exec)?;
        let mut out = ctx.csv_head("solve", args);
        out.push_str(&write_csv(&ctx.seq, &u));
        return Ok(Outcome::ok(out));
    }
    let points = at
        .iter()
        .map(|s| parse_address(s))
        .collect::<Result<Vec<Address>, _>>()?;
    let values = apply_semigroup_at(&ctx.seq, &field, &points, t, tol, ctx.exec)?;
    let rows: Vec<Value> = points
        .iter()
        .zip(&values)
        .map(|(x, v)| json!({ "x": x, "value": v }))
        .collect();
    Ok(Outcome::ok(ctx.json(
        "solve",
        args,
        json!({ "values": rows }),
    )))
}

fn cmd_schrodinger(ctx: &Ctx, x: &str, y: Option<&str>, m: usize) -> Result<Outcome, CliError> {
    let xa = parse_address(x)?;
    let t = ctx.single_t()?;
    let eps = ctx.g().eps.unwrap_or_else(|| default_regularization(t));
    let (level, limit) = ctx.level()?;
    let tol = ctx.g().tol;
    if let Some(y) = y {
        let ya = parse_address(y)?;
        let r = if limit {
            schrodinger_kernel(&ctx.seq, &xa, &ya, t, Some(eps), tol)?
        } else {
            schrodinger_kernel_level(&ctx.seq, level, &xa, &ya, t, eps, tol)?
        };
        let body = json!({
            "re": r.value.re, "im": r.value.im, "abs2": r.value.norm_sqr(), "eps": eps,
            "tail_bound": r.tail_bound, "i_star": r.i_star, "levels_used": r.levels_used,
            "saturated": r.saturated,
        });
        return Ok(Outcome::ok(ctx.json(
            "schrodinger",
            json!({ "x": xa, "y": ya, "eps": eps }),
            body,
        )));
    }
    let layout = GridLayout::new(&ctx.seq, level, m)?;
    let values: Vec<num_complex::Complex64> = if limit {
        let addresses = (0..layout.len())
            .map(|k| layout.node_address(&ctx.seq, k))
            .collect::<Result<Vec<_>, _>>()?;
        ctx.exec
            .map(addresses.len(), |k| {
                schrodinger_kernel(&ctx.seq, &xa, &addresses[k], t, Some(eps), tol).map(|r| r.value)
            })
            .into_iter()
            .collect::<Result<_, _>>()?
    } else {
        let kernels = LevelKernels::new_complex(&ctx.seq, ComplexTime::new(eps, t), level, tol)?;
        let cx = LocatedChain::new(&ctx.seq, &xa, level)?;
        let nodes = layout.node_chains(&ctx.seq, ctx.exec)?;
        ctx.exec
            .map(nodes.len(), |k| kernels.eval_chains(&cx, &nodes[k], level))
            .into_iter()
            .collect::<Result<_, _>>()?
    };
    let mut out = ctx.csv_head("schrodinger", json!({ "x": xa, "eps": eps, "m": m }));
    out.push_str("cell,node,theta,re,im,abs2\n");
    for (k, v) in values.iter().enumerate() {
        let (cell, r) = (k / m, k % m);
        let _ = writeln!(
            out,
            "{},{r},{},{},{},{}",
            layout.cell_name(&ctx.seq, cell),
            layout.theta(r),
            v.re,
            v.im,
            v.norm_sqr()
        );
    }
    Ok(Outcome::ok(out))
}

fn cmd_dim(cli: &Cli, j: Option<u64>, n: Option<u64>) -> Result<Outcome, CliError> {
    let (j, n) = match (j, n) {
        (Some(j), Some(n)) => (j, n),
        (None, None) => {
            let seq = load_params(cli.global.params.as_deref())?;
            let (js, ns) = (seq.j_values(), seq.n_values());
            match (js.first(), ns.first()) {
                (Some(&j), Some(&n))
                    if js.iter().all(|&v| v == j) && ns.iter().all(|&v| v == n) =>
                {
                    (j, n)
                }
                _ => {
                    return Err(CliError::Config(
                        "the dimension needs constant branching; pass --j and --n".into(),
                    ))
                }
            }
        }
        _ => return Err(CliError::Config("pass both --j and --n".into())),
    };
    let dimension = hausdorff_dimension(j, n)?;
    let body = json!({
        "dimension": dimension,
        "config": { "command": "dim", "j": j, "n": n },
    });
    Ok(Outcome::ok(
        serde_json::to_string_pretty(&body).expect("serializable") + "\n",
    ))
}

fn cmd_bound(ctx: &Ctx, horizon: Option<usize>) -> Result<Outcome, CliError> {
    let t = ctx.single_t()?;
    let depth = ctx.seq.depth();
    let levels: Vec<usize> = match ctx.g().level {
        Some(i) => {
            ctx.seq.check_level(i)?;
            vec![i]
        }
        None => (1..=depth).collect(),
    };
    let rows = levels
        .iter()
        .map(|&i| {
            Ok(json!({
                "level": i,
                "bound": uniform_bound(&ctx.seq, i, t)?,
                "tail_beyond": tail_sum(&ctx.seq, i, t),
            }))
        })
        .collect::<Result<Vec<Value>, CliError>>()?;
    let assumption = ctx
        .seq
        .check_assumption(t, horizon.unwrap_or(depth).min(depth))?;
    let body = json!({ "levels": rows, "assumption": assumption });
    Ok(Outcome::ok(ctx.json(
        "bound",
        json!({ "horizon": horizon }),
        body,
    )))
}
