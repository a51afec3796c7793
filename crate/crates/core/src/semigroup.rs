//! Functions on `F_i` sampled at cell midpoints, and the heat semigroup
//! acting on them.
//!
//! A [`GridLayout`] puts `m` midpoint nodes `θ_r = (r + ½) L_i / m` in every
//! `i`-cell. Each node carries the quadrature weight `L_i / (N_i m)`, so the
//! weights add up to `2π`. Level 0 is laid out as the two half circles
//! `[0, π)` and `[π, 2π)`, which keeps the same formulas with `J_0 = 1`.
//!
//! Cells are numbered `arc · N_i + code(w_1 … w_i)` with `w_i` varying
//! fastest, so the `n_i` strands of a bundle are consecutive.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::fractal::{chain_at_level, LevelKernels};
use crate::geometry::{
    junction_key, label_code, labels_from_code, sample_point, Address, CellWord, JunctionKey,
    LocatedChain,
};
use crate::par::Exec;
use crate::params::ParameterSequences;

const MAX_NODES: u128 = 1 << 24;

/// Node placement of a grid on `F_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub level: usize,
    /// Nodes per cell.
    pub m: usize,
    /// Arcs of the base circle, `2 J_i`.
    pub arcs: u128,
    /// Label words per arc, `N_i`.
    pub labels: u128,
    /// `J_i`.
    pub big_j: u128,
    /// Cell length `π / J_i`.
    pub cell_length: f64,
}

impl GridLayout {
    pub fn new(seq: &ParameterSequences, level: usize, m: usize) -> Result<Self> {
        seq.check_level(level)?;
        if m == 0 {
            return Err(Error::Domain(
                "at least one node per cell is required".into(),
            ));
        }
        let big_j = seq.big_j(level);
        let labels = seq.big_n(level);
        let arcs = 2 * big_j;
        arcs.checked_mul(labels)
            .and_then(|c| c.checked_mul(m as u128))
            .filter(|&n| n <= MAX_NODES)
            .ok_or_else(|| {
                Error::Capacity(format!("grid at level {level} with {m} nodes per cell"))
            })?;
        Ok(Self {
            level,
            m,
            arcs,
            labels,
            big_j,
            cell_length: PI / big_j as f64,
        })
    }

    pub fn cells(&self) -> usize {
        (self.arcs * self.labels) as usize
    }

    pub fn len(&self) -> usize {
        self.cells() * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.cell_length / self.m as f64
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        self.spacing() / self.labels as f64
    }

    /// Local coordinate of node `r`.
    pub fn theta(&self, r: usize) -> f64 {
        (r as f64 + 0.5) * self.spacing()
    }

    pub fn arc_of_cell(&self, cell: usize) -> u128 {
        cell as u128 / self.labels
    }

    pub fn cell_word(&self, seq: &ParameterSequences, cell: usize) -> CellWord {
        let arc = self.arc_of_cell(cell);
        let code = cell as u128 % self.labels;
        CellWord {
            level: self.level,
            arc,
            branches: labels_from_code(seq, self.level, code),
        }
    }

    pub fn cell_index(&self, seq: &ParameterSequences, arc: u128, branches: &[u32]) -> usize {
        (arc * self.labels + label_code(seq, branches)) as usize
    }

    /// `k/J:w1.w2…`, the cell whose arc starts at `π k / J`.
    pub fn cell_name(&self, seq: &ParameterSequences, cell: usize) -> String {
        let word = self.cell_word(seq, cell);
        let labels: Vec<String> = word.branches.iter().map(|w| w.to_string()).collect();
        format!("{}/{}:{}", word.arc, self.big_j, labels.join("."))
    }

    /// Base-circle angle of node `r` in `cell`, in radians.
    pub fn node_angle(&self, cell: usize, r: usize) -> f64 {
        self.arc_of_cell(cell) as f64 * self.cell_length + self.theta(r)
    }

    /// Node `index` as a point of `F_i`, with its exact angle
    /// `π (2 m k + 2 r + 1) / (2 m J_i)`.
    pub fn node_address(&self, seq: &ParameterSequences, index: usize) -> Result<Address> {
        let (cell, r) = (index / self.m, index % self.m);
        let word = self.cell_word(seq, cell);
        let m = self.m as u128;
        Address::exact(
            2 * m * word.arc + 2 * r as u128 + 1,
            2 * m * self.big_j,
            word.branches,
        )
    }

    /// Chains for every node, located down to the grid level.
    pub fn node_chains(&self, seq: &ParameterSequences, exec: Exec) -> Result<Vec<LocatedChain>> {
        exec.map(self.len(), |idx| {
            self.node_address(seq, idx)
                .and_then(|x| chain_at_level(seq, &x, self.level))
        })
        .into_iter()
        .collect()
    }
}

/// Node values of a function on `F_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub layout: GridLayout,
    /// `values[cell * m + r]`.
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(layout: &GridLayout) -> Self {
        Self {
            layout: layout.clone(),
            values: vec![0.0; layout.len()],
        }
    }

    pub fn constant(layout: &GridLayout, c: f64) -> Self {
        Self {
            layout: layout.clone(),
            values: vec![c; layout.len()],
        }
    }

    /// Sample `f(η, w)` at every node.
    pub fn from_fn(
        seq: &ParameterSequences,
        layout: &GridLayout,
        f: impl Fn(f64, &[u32]) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(layout.len());
        for cell in 0..layout.cells() {
            let word = layout.cell_word(seq, cell);
            for r in 0..layout.m {
                values.push(f(layout.node_angle(cell, r), &word.branches));
            }
        }
        Self {
            layout: layout.clone(),
            values,
        }
    }

    pub fn level(&self) -> usize {
        self.layout.level
    }

    pub fn get(&self, cell: usize, r: usize) -> f64 {
        self.values[cell * self.layout.m + r]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn check_same_grid(&self, other: &GridField) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::GridMismatch(format!(
                "level {} with m = {} against level {} with m = {}",
                self.layout.level, self.layout.m, other.layout.level, other.layout.m
            )));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(GridField {
            layout: self.layout.clone(),
            values,
        })
    }

    /// `max |self - other|`.
    pub fn distance(&self, other: &GridField) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| a - b)?.max_abs())
    }

    /// `⟨f, g⟩` in `L²(μ_i)` by the midpoint rule.
    pub fn inner(&self, other: &GridField) -> Result<f64> {
        self.check_same_grid(other)?;
        let w = self.layout.weight();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * w)
    }

    /// Value at a point of `F_k` (`k` the field's level) by linear
    /// interpolation between the nodes of its cell, extrapolating linearly
    /// past the outermost nodes. Node positions are reproduced exactly.
    pub fn sample(&self, seq: &ParameterSequences, eta: f64, branches: &[u32]) -> f64 {
        let lay = &self.layout;
        let mut arc = (eta / lay.cell_length).floor().max(0.0) as u128;
        arc = arc.min(lay.arcs - 1);
        let theta = eta - arc as f64 * lay.cell_length;
        let cell = lay.cell_index(seq, arc, &branches[..lay.level]);
        let pos = theta / lay.spacing() - 0.5;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 && nearest >= 0.0 && nearest < lay.m as f64 {
            return self.get(cell, nearest as usize);
        }
        if lay.m == 1 {
            return self.get(cell, 0);
        }
        let lo = (pos.floor().max(0.0) as usize).min(lay.m - 2);
        let frac = pos - lo as f64;
        let (a, b) = (self.get(cell, lo), self.get(cell, lo + 1));
        a + (b - a) * frac
    }

    /// `f ∘ φ_{ik}` on a level-`level` grid with `m` nodes per cell.
    ///
    /// When the two spacings agree the fine nodes are coarse nodes and the
    /// values are copied; otherwise they are interpolated.
    pub fn pullback(&self, seq: &ParameterSequences, level: usize, m: usize) -> Result<GridField> {
        if level < self.level() {
            return Err(Error::GridMismatch(format!(
                "cannot pull a level-{} field back to level {level}",
                self.level()
            )));
        }
        let layout = GridLayout::new(seq, level, m)?;
        Ok(GridField::from_fn(seq, &layout, |eta, w| {
            self.sample(seq, eta, w)
        }))
    }
}

/// `∫_{F_i} f dμ_i` by the midpoint rule.
pub fn integrate(f: &GridField) -> f64 {
    f.values.iter().sum::<f64>() * f.layout.weight()
}

/// Bundle-symmetric part and remainder of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSplit {
    pub sym: GridField,
    pub anti: GridField,
}

/// Average over the strands of each bundle (`P_i f`) and the remainder
/// (`P_i^⊥ f`). At level 0 there are no strands and the remainder is zero.
pub fn project_sym(seq: &ParameterSequences, f: &GridField) -> ProjectionSplit {
    let lay = &f.layout;
    if lay.level == 0 {
        return ProjectionSplit {
            sym: f.clone(),
            anti: GridField::zeros(lay),
        };
    }
    let n = seq.n(lay.level) as usize;
    let m = lay.m;
    let mut sym = GridField::zeros(lay);
    for group in 0..lay.cells() / n {
        for r in 0..m {
            let mean = (0..n).map(|s| f.get(group * n + s, r)).sum::<f64>() / n as f64;
            for s in 0..n {
                sym.values[(group * n + s) * m + r] = mean;
            }
        }
    }
    let anti = f.zip_with(&sym, |a, b| a - b).expect("same grid");
    ProjectionSplit { sym, anti }
}

/// `(T_t f)(x) = Σ_y p_t^{F_i}(x, y) f(y) w` at every node `x`.
pub fn apply_semigroup(
    seq: &ParameterSequences,
    f: &GridField,
    t: f64,
    tol: f64,
) -> Result<GridField> {
    apply_semigroup_with(seq, f, t, tol, Exec::default())
}

pub fn apply_semigroup_with(
    seq: &ParameterSequences,
    f: &GridField,
    t: f64,
    tol: f64,
    exec: Exec,
) -> Result<GridField> {
    let sources = f.layout.node_chains(seq, exec)?;
    let values = apply_at_chains(seq, f, &sources, &sources, t, tol, exec)?;
    Ok(GridField {
        layout: f.layout.clone(),
        values,
    })
}

/// `T_t f` at arbitrary points of `F_i` (words at least as long as the
/// field's level need; longer words are projected).
pub fn apply_semigroup_at(
    seq: &ParameterSequences,
    f: &GridField,
    points: &[Address],
    t: f64,
    tol: f64,
    exec: Exec,
) -> Result<Vec<f64>> {
    let level = f.level();
    let sources = f.layout.node_chains(seq, exec)?;
    let targets = points
        .iter()
        .map(|x| chain_at_level(seq, x, level))
        .collect::<Result<Vec<_>>>()?;
    apply_at_chains(seq, f, &sources, &targets, t, tol, exec)
}

fn apply_at_chains(
    seq: &ParameterSequences,
    f: &GridField,
    sources: &[LocatedChain],
    targets: &[LocatedChain],
    t: f64,
    tol: f64,
    exec: Exec,
) -> Result<Vec<f64>> {
    let level = f.level();
    let kernels = LevelKernels::new(seq, t, level, tol)?;
    let w = f.layout.weight();
    let rows = exec.map(targets.len(), |a| -> Result<f64> {
        let mut acc = 0.0;
        for (b, y) in sources.iter().enumerate() {
            let v = f.values[b];
            if v != 0.0 {
                acc += kernels.eval_chains(&targets[a], y, level)? * v;
            }
        }
        Ok(acc * w)
    });
    rows.into_iter().collect()
}

/// Solution `u(t, x) = Σ_y p_t(x, y) u_0(y) w` of the heat equation at the
/// requested points.
///
/// The initial datum lives on `F_i`, so points of deeper levels or of the
/// limit space are evaluated through their level-`i` projection; the
/// projected kernels intertwine, so this is the limit value as well.
pub fn heat_solve(
    seq: &ParameterSequences,
    u0: &GridField,
    t: f64,
    points: &[Address],
    tol: f64,
) -> Result<Vec<f64>> {
    apply_semigroup_at(seq, u0, points, t, tol, Exec::default())
}

/// Parts of the decomposition check.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    /// `max |T_t f - (sym + anti)|` over the nodes.
    pub residual: f64,
    /// `T_t f` on `F_i`.
    pub full: GridField,
    /// `T_t^{F_{i-1}}(P_i f)` read at the level-`i` nodes.
    pub sym_term: GridField,
    /// Dirichlet evolution of `P_i^⊥ f` inside each cell.
    pub anti_term: GridField,
}

/// Compare `T_t^{F_i} f` with the sum of the coarse evolution of the
/// bundle-symmetric part and the cellwise Dirichlet evolution of the rest.
///
/// The symmetric part is transferred to a level-`(i-1)` grid with the same
/// number of nodes per cell by interpolation, so the residual measures the
/// identity up to an `O(m⁻²)` quadrature and interpolation error.
pub fn check_decomposition(
    seq: &ParameterSequences,
    f: &GridField,
    t: f64,
    tol: f64,
) -> Result<DecompositionReport> {
    check_decomposition_with(seq, f, t, tol, Exec::default())
}

pub fn check_decomposition_with(
    seq: &ParameterSequences,
    f: &GridField,
    t: f64,
    tol: f64,
    exec: Exec,
) -> Result<DecompositionReport> {
    require_positive("time", t)?;
    let lay = &f.layout;
    let level = lay.level;
    if level == 0 {
        return Err(Error::Domain("the decomposition needs level ≥ 1".into()));
    }
    let full = apply_semigroup_with(seq, f, t, tol, exec)?;
    let split = project_sym(seq, f);

    let coarse_layout = GridLayout::new(seq, level - 1, lay.m)?;
    let sym = &split.sym;
    let coarse = GridField::from_fn(seq, &coarse_layout, |eta, w| {
        let mut fine = w.to_vec();
        fine.push(1);
        sym.sample(seq, eta, &fine)
    });
    let targets = (0..lay.len())
        .map(|idx| lay.node_address(seq, idx))
        .collect::<Result<Vec<_>>>()?;
    let coarse_sources = coarse_layout.node_chains(seq, exec)?;
    let target_chains = targets
        .iter()
        .map(|x| chain_at_level(seq, x, level - 1))
        .collect::<Result<Vec<_>>>()?;
    let sym_values = apply_at_chains(seq, &coarse, &coarse_sources, &target_chains, t, tol, exec)?;
    let sym_term = GridField {
        layout: lay.clone(),
        values: sym_values,
    };

    let kernel = crate::kernel1d::DirichletKernel::new(
        t,
        lay.cell_length,
        &crate::kernel1d::EvalOptions::with_tol(tol),
    )?;
    let h = lay.spacing();
    let m = lay.m;
    let anti = &split.anti;
    let anti_values = exec.map(lay.len(), |idx| {
        let (cell, r) = (idx / m, idx % m);
        let x = lay.theta(r);
        (0..m)
            .map(|q| kernel.eval_unchecked(x, lay.theta(q)) * anti.get(cell, q))
            .sum::<f64>()
            * h
    });
    let anti_term = GridField {
        layout: lay.clone(),
        values: anti_values,
    };

    let predicted = sym_term.zip_with(&anti_term, |a, b| a + b)?;
    let residual = full.distance(&predicted)?;
    Ok(DecompositionReport {
        residual,
        full,
        sym_term,
        anti_term,
    })
}

/// Result of the Chapman–Kolmogorov check.
#[derive(Debug, Clone, Serialize)]
pub struct ChapmanKolmogorovReport {
    pub residual: f64,
    pub pairs: usize,
    pub nodes: usize,
}

/// Seed of the point pairs used by [`check_chapman_kolmogorov`].
pub const CHAPMAN_SEED: u64 = 0x5eed_c4a9;

/// `max |Σ_z p_t(x, z) p_s(z, y) w - p_{t+s}(x, y)|` over eight random
/// pairs and four diagonal pairs, with `z` on the level-`i` grid with `m`
/// nodes per cell.
pub fn check_chapman_kolmogorov(
    seq: &ParameterSequences,
    level: usize,
    t: f64,
    s: f64,
    m: usize,
    tol: f64,
) -> Result<ChapmanKolmogorovReport> {
    check_chapman_kolmogorov_with(seq, level, t, s, m, tol, Exec::default())
}

pub fn check_chapman_kolmogorov_with(
    seq: &ParameterSequences,
    level: usize,
    t: f64,
    s: f64,
    m: usize,
    tol: f64,
    exec: Exec,
) -> Result<ChapmanKolmogorovReport> {
    require_positive("time", t)?;
    require_positive("time", s)?;
    let layout = GridLayout::new(seq, level, m)?;
    let nodes = layout.node_chains(seq, exec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(CHAPMAN_SEED);
    let mut pairs = Vec::new();
    for _ in 0..8 {
        let x = sample_point(seq, &mut rng, level)?;
        let mut y = sample_point(seq, &mut rng, level)?;
        if rng.random_bool(0.5) {
            // same arc of the coarsest level, so corrections are exercised
            y.eta = crate::geometry::Angle::real(
                x.eta.radians() + (rng.random::<f64>() - 0.5) * 0.1 * seq.arc_length(level.max(1)),
            )?;
        }
        pairs.push((x, y));
    }
    for _ in 0..4 {
        let x = sample_point(seq, &mut rng, level)?;
        pairs.push((x.clone(), x));
    }
    let kt = LevelKernels::new(seq, t, level, tol)?;
    let ks = LevelKernels::new(seq, s, level, tol)?;
    let kts = LevelKernels::new(seq, t + s, level, tol)?;
    let w = layout.weight();
    let mut residual: f64 = 0.0;
    for (x, y) in &pairs {
        let cx = chain_at_level(seq, x, level)?;
        let cy = chain_at_level(seq, y, level)?;
        let parts = exec.map(nodes.len(), |b| -> Result<f64> {
            Ok(kt.eval_chains(&cx, &nodes[b], level)? * ks.eval_chains(&nodes[b], &cy, level)?)
        });
        let mut total = 0.0;
        for p in parts {
            total += p?;
        }
        let direct = kts.eval_chains(&cx, &cy, level)?;
        residual = residual.max((total * w - direct).abs());
    }
    Ok(ChapmanKolmogorovReport {
        residual,
        pairs: pairs.len(),
        nodes: nodes.len(),
    })
}

/// `max |T_t^{F_i}(f_k ∘ φ_{ik}) - (T_t^{F_k} f_k) ∘ φ_{ik}|` over the
/// level-`i` nodes, with `m_i` nodes per level-`i` cell.
pub fn check_intertwining(
    seq: &ParameterSequences,
    level: usize,
    f: &GridField,
    t: f64,
    m: usize,
    tol: f64,
) -> Result<f64> {
    if level < f.level() {
        return Err(Error::GridMismatch("intertwining needs i ≥ k".into()));
    }
    let lifted = f.pullback(seq, level, m)?;
    let lhs = apply_semigroup(seq, &lifted, t, tol)?;
    let coarse = apply_semigroup(seq, f, t, tol)?;
    let rhs = coarse.pullback(seq, level, m)?;
    lhs.distance(&rhs)
}

fn cell_derivatives(f: &GridField, cell: usize) -> Vec<f64> {
    let m = f.layout.m;
    let h = f.layout.spacing();
    let v = |r: usize| f.get(cell, r);
    (0..m)
        .map(|r| {
            if r == 0 {
                (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
            } else if r == m - 1 {
                (3.0 * v(m - 1) - 4.0 * v(m - 2) + v(m - 3)) / (2.0 * h)
            } else {
                (v(r + 1) - v(r - 1)) / (2.0 * h)
            }
        })
        .collect()
}

/// `Σ_cells (1/N_i) ∫ f' g' dθ`, with central differences inside the cell
/// and second-order one-sided differences at its ends.
pub fn dirichlet_energy(f: &GridField, g: &GridField) -> Result<f64> {
    f.check_same_grid(g)?;
    let lay = &f.layout;
    if lay.m < 3 {
        return Err(Error::Domain(
            "energy needs at least three nodes per cell".into(),
        ));
    }
    let mut total = 0.0;
    for cell in 0..lay.cells() {
        let df = cell_derivatives(f, cell);
        let dg = cell_derivatives(g, cell);
        total += df.iter().zip(&dg).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total * lay.weight())
}

/// Values at the two ends of every cell, extrapolated quadratically from the
/// three nearest nodes.
fn end_values(f: &GridField, cell: usize) -> (f64, f64) {
    let m = f.layout.m;
    let v = |r: usize| f.get(cell, r);
    if m < 3 {
        return (v(0), v(m - 1));
    }
    let start = (15.0 * v(0) - 10.0 * v(1) + 3.0 * v(2)) / 8.0;
    let end = (15.0 * v(m - 1) - 10.0 * v(m - 2) + 3.0 * v(m - 3)) / 8.0;
    (start, end)
}

/// Largest spread of extrapolated cell-end values over the junctions of
/// `F_i`; small for fields that satisfy the matching conditions.
pub fn matching_defect(seq: &ParameterSequences, f: &GridField) -> f64 {
    let lay = &f.layout;
    let mut ends: BTreeMap<JunctionKey, (f64, f64)> = BTreeMap::new();
    let mut record = |key: JunctionKey, v: f64| {
        let e = ends.entry(key).or_insert((v, v));
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    };
    for cell in 0..lay.cells() {
        let word = lay.cell_word(seq, cell);
        let (a, b) = end_values(f, cell);
        record(junction_key(seq, lay.level, word.arc, &word.branches), a);
        record(
            junction_key(seq, lay.level, word.arc + 1, &word.branches),
            b,
        );
    }
    ends.values().fold(0.0, |acc, (lo, hi)| acc.max(hi - lo))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvHeader {
    level: usize,
    m: usize,
    j: Vec<u64>,
    n: Vec<u64>,
}

/// CSV text: a `# {json}` metadata line, then `cell,node,theta,value` rows.
/// Cells are written `k/J:w1.w2…` for the arc starting at `π k / J`.
pub fn write_csv(seq: &ParameterSequences, f: &GridField) -> String {
    let lay = &f.layout;
    let header = CsvHeader {
        level: lay.level,
        m: lay.m,
        j: seq.j_values().to_vec(),
        n: seq.n_values().to_vec(),
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {}",
        serde_json::to_string(&header).expect("serializable")
    );
    out.push_str("cell,node,theta,value\n");
    for cell in 0..lay.cells() {
        let name = lay.cell_name(seq, cell);
        for r in 0..lay.m {
            let _ = writeln!(out, "{name},{r},{},{}", lay.theta(r), f.get(cell, r));
        }
    }
    out
}

/// Inverse of [`write_csv`]. Leading `#` lines other than the grid
/// metadata are skipped.
pub fn read_csv(seq: &ParameterSequences, text: &str) -> Result<GridField> {
    let mut lines = text.lines().peekable();
    let mut header: Option<CsvHeader> = None;
    while let Some(meta) = lines.peek().and_then(|l| l.strip_prefix('#')) {
        if header.is_none() {
            header = serde_json::from_str(meta.trim()).ok();
        }
        lines.next();
    }
    let header = header.ok_or_else(|| Error::Parse("missing grid metadata line".into()))?;
    if header.j != seq.j_values()[..header.j.len().min(seq.depth())]
        || header.n != seq.n_values()[..header.n.len().min(seq.depth())]
    {
        return Err(Error::GridMismatch(
            "field was written for other parameters".into(),
        ));
    }
    let layout = GridLayout::new(seq, header.level, header.m)?;
    if lines.next() != Some("cell,node,theta,value") {
        return Err(Error::Parse("missing column header".into()));
    }
    let mut field = GridField::zeros(&layout);
    let mut seen = vec![false; layout.len()];
    for (n, line) in lines.enumerate() {
        let bad = |what: &str| Error::Parse(format!("row {}: {what}", n + 1));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad("expected four columns"));
        }
        let (base, labels) = cols[0].split_once(':').ok_or_else(|| bad("cell name"))?;
        let (arc, _) = base.split_once('/').ok_or_else(|| bad("cell name"))?;
        let arc: u128 = arc.parse().map_err(|_| bad("arc index"))?;
        let branches: Vec<u32> = if labels.is_empty() {
            Vec::new()
        } else {
            labels
                .split('.')
                .map(|w| w.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("labels"))?
        };
        if arc >= layout.arcs || branches.len() != layout.level {
            return Err(bad("cell outside the layout"));
        }
        for (l, &w) in branches.iter().enumerate() {
            if w < 1 || w as u64 > seq.n(l + 1) {
                return Err(bad("label out of range"));
            }
        }
        let r: usize = cols[1].parse().map_err(|_| bad("node index"))?;
        if r >= layout.m {
            return Err(bad("node index out of range"));
        }
        let value: f64 = cols[3].parse().map_err(|_| bad("value"))?;
        let idx = layout.cell_index(seq, arc, &branches) * layout.m + r;
        field.values[idx] = value;
        seen[idx] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Parse("some nodes are missing".into()));
    }
    Ok(field)
}
