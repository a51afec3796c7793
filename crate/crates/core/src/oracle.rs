//! Reference solutions that do not use the kernel formulas.
//!
//! [`DiscreteGraph`] cuts every `i`-cell of `F_i` into segments of length
//! `h`. Interior points and shared junctions become nodes, every segment an
//! edge with conductance `1/(h N_i)`, and each node gets the lumped mass of
//! the half segments around it (`h/N_i` inside a cell, `d h/(2 N_i)` at a
//! junction with `d` incident cell ends). The generator `M⁻¹K` is then a
//! second-order finite-difference Laplacian with equal-weight Kirchhoff
//! conditions at the junctions.
//!
//! Densities come from a dense eigendecomposition of the symmetrized
//! generator `M^{-1/2} K M^{-1/2}`. Random walks run the same generator as a
//! continuous-time chain: every node leaves at total rate `2/h²` and jumps
//! to a uniformly chosen neighbour along an incident segment.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{require_positive, Error, Result};
use crate::fractal::LevelKernels;
use crate::geometry::{junction_key, Address, JunctionKey, LocatedChain};
use crate::kernel1d::ComplexTime;
use crate::par::Exec;
use crate::params::ParameterSequences;
use crate::semigroup::GridLayout;

/// Largest graph accepted by the dense solver.
pub const MAX_DENSE_NODES: usize = 10_000;

/// What a graph node stands for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Junction(JunctionKey),
    /// Point `k h` inside cell `cell` (grid cell numbering).
    Interior {
        cell: usize,
        step: usize,
    },
}

#[derive(Debug, Clone)]
pub struct DiscreteGraph {
    pub level: usize,
    pub h: f64,
    /// Segments per cell.
    pub segments: usize,
    pub kinds: Vec<NodeKind>,
    pub mass: Vec<f64>,
    /// `(a, b)` pairs, one per segment.
    pub edges: Vec<(usize, usize)>,
    pub conductance: f64,
    /// Neighbour lists, one entry per incident segment.
    pub neighbours: Vec<Vec<usize>>,
    /// Incident cell ends of each node: `(cell, at_start)`.
    pub cell_ends: Vec<Vec<(usize, bool)>>,
    addresses: Vec<Address>,
    layout: GridLayout,
}

/// Build the discretization of `F_i` with segment length `h`. The cell
/// length must be an integer multiple of `h`, at least eight segments.
pub fn build_graph(seq: &ParameterSequences, level: usize, h: f64) -> Result<DiscreteGraph> {
    require_positive("segment length", h)?;
    let layout = GridLayout::new(seq, level, 1)?;
    let ratio = layout.cell_length / h;
    let segments = ratio.round();
    if (ratio - segments).abs() > 1e-9 * ratio {
        return Err(Error::Domain(format!(
            "cell length {} is not a multiple of h = {h}",
            layout.cell_length
        )));
    }
    let segments = segments as usize;
    if segments < 8 {
        return Err(Error::Domain(format!(
            "h = {h} is coarser than an eighth of a cell"
        )));
    }
    let cells = layout.cells();
    let total = cells * (segments - 1);
    if total > 1 << 26 {
        return Err(Error::Capacity(format!("{total} graph nodes")));
    }

    let mut junction_ids: BTreeMap<JunctionKey, usize> = BTreeMap::new();
    let mut ends = Vec::with_capacity(cells);
    for cell in 0..cells {
        let word = layout.cell_word(seq, cell);
        let a = junction_key(seq, level, word.arc, &word.branches);
        let b = junction_key(seq, level, word.arc + 1, &word.branches);
        let next = junction_ids.len();
        junction_ids.entry(a.clone()).or_insert(next);
        let next = junction_ids.len();
        junction_ids.entry(b.clone()).or_insert(next);
        ends.push((a, b));
    }
    let junctions = junction_ids.len();
    let n_nodes = junctions + total;

    let mut kinds = vec![
        NodeKind::Junction(JunctionKey {
            angle_index: 0,
            prefix: vec![]
        });
        junctions
    ];
    for (key, &id) in &junction_ids {
        kinds[id] = NodeKind::Junction(key.clone());
    }
    let mut mass = vec![0.0; n_nodes];
    let mut neighbours = vec![Vec::new(); n_nodes];
    let mut cell_ends = vec![Vec::new(); n_nodes];
    let mut edges = Vec::with_capacity(cells * segments);
    let big_n = layout.labels as f64;
    let half = h / (2.0 * big_n);
    for (cell, (a, b)) in ends.iter().enumerate() {
        let start = junction_ids[a];
        let end = junction_ids[b];
        let first_interior = junctions + cell * (segments - 1);
        let mut chain = Vec::with_capacity(segments + 1);
        chain.push(start);
        for step in 1..segments {
            let id = first_interior + step - 1;
            kinds.push(NodeKind::Interior { cell, step });
            mass[id] = 2.0 * half;
            chain.push(id);
        }
        chain.push(end);
        mass[start] += half;
        mass[end] += half;
        cell_ends[start].push((cell, true));
        cell_ends[end].push((cell, false));
        for w in chain.windows(2) {
            edges.push((w[0], w[1]));
            neighbours[w[0]].push(w[1]);
            neighbours[w[1]].push(w[0]);
        }
    }

    let big_j = layout.big_j;
    let addresses = kinds
        .iter()
        .map(|kind| match kind {
            NodeKind::Junction(key) => Address::exact(key.angle_index, big_j, key.prefix.clone()),
            NodeKind::Interior { cell, step } => {
                let word = layout.cell_word(seq, *cell);
                let s = segments as u128;
                Address::exact(word.arc * s + *step as u128, s * big_j, word.branches)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DiscreteGraph {
        level,
        h,
        segments,
        kinds,
        mass,
        edges,
        conductance: 1.0 / (h * big_n),
        neighbours,
        cell_ends,
        addresses,
        layout,
    })
}

impl DiscreteGraph {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn junction_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| matches!(k, NodeKind::Junction(_)))
            .count()
    }

    /// The point of `F_i` a node stands for.
    pub fn address(&self, node: usize) -> &Address {
        &self.addresses[node]
    }

    /// Interior node `step` of `cell`.
    pub fn interior_node(&self, cell: usize, step: usize) -> usize {
        self.junction_count() + cell * (self.segments - 1) + step - 1
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Stiffness matrix `K`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut k = DMatrix::zeros(n, n);
        let c = self.conductance;
        for &(a, b) in &self.edges {
            k[(a, a)] += c;
            k[(b, b)] += c;
            k[(a, b)] -= c;
            k[(b, a)] -= c;
        }
        k
    }

    /// Generator `-M⁻¹K` (rows sum to zero).
    pub fn generator(&self) -> DMatrix<f64> {
        let mut g = -self.stiffness();
        for (r, m) in self.mass.iter().enumerate() {
            g.row_mut(r).scale_mut(1.0 / m);
        }
        g
    }

    /// Eigendecomposition of `M^{-1/2} K M^{-1/2}`.
    pub fn spectrum(&self) -> Result<GraphSpectrum> {
        let n = self.len();
        if n > MAX_DENSE_NODES {
            return Err(Error::Capacity(format!(
                "{n} nodes exceed the dense limit of {MAX_DENSE_NODES}"
            )));
        }
        let inv_sqrt = DVector::from_iterator(n, self.mass.iter().map(|m| m.sqrt().recip()));
        let mut a = self.stiffness();
        for r in 0..n {
            for c in 0..n {
                a[(r, c)] *= inv_sqrt[r] * inv_sqrt[c];
            }
        }
        let eig = SymmetricEigen::new(a);
        Ok(GraphSpectrum {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
            inv_sqrt_mass: inv_sqrt,
        })
    }

    /// Occupancy of a walker population after time `t`.
    pub fn random_walk(
        &self,
        t: f64,
        start: WalkStart,
        walkers: usize,
        seed: u64,
        exec: Exec,
    ) -> Result<WalkResult> {
        require_positive("time", t)?;
        let rate = 2.0 * t / (self.h * self.h);
        let jumps = Poisson::new(rate).map_err(|e| Error::Domain(e.to_string()))?;
        if let WalkStart::Node(x) = start {
            if x >= self.len() {
                return Err(Error::Domain(format!("node {x} does not exist")));
            }
        }
        let cumulative: Vec<f64> = self
            .mass
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        let total = *cumulative.last().expect("nonempty graph");
        // each walker gets its own stream of one seeded generator
        let finals = exec.map(walkers, |w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            let mut node = match start {
                WalkStart::Node(x) => x,
                WalkStart::Stationary => {
                    let u = rng.random::<f64>() * total;
                    cumulative.partition_point(|&c| c <= u).min(self.len() - 1)
                }
            };
            let count = jumps.sample(&mut rng) as u64;
            for _ in 0..count {
                let nb = &self.neighbours[node];
                node = nb[rng.random_range(0..nb.len())];
            }
            let ends = &self.cell_ends[node];
            let cell = match &self.kinds[node] {
                NodeKind::Interior { cell, .. } => *cell,
                NodeKind::Junction(_) => ends[rng.random_range(0..ends.len())].0,
            };
            (node, cell)
        });
        let mut node_counts = vec![0u64; self.len()];
        let mut cell_counts = vec![0u64; self.layout.cells()];
        for (node, cell) in finals {
            node_counts[node] += 1;
            cell_counts[cell] += 1;
        }
        let density = node_counts
            .iter()
            .zip(&self.mass)
            .map(|(&c, m)| c as f64 / walkers as f64 / m)
            .collect();
        Ok(WalkResult {
            walkers,
            node_counts,
            cell_counts,
            density,
        })
    }

    /// Largest deviation of the oracle density from the closed-form level
    /// kernel over all node pairs, absolute and relative to the largest
    /// closed-form value.
    pub fn compare_with_kernel(
        &self,
        seq: &ParameterSequences,
        spectrum: &GraphSpectrum,
        t: f64,
        tol: f64,
        exec: Exec,
    ) -> Result<OracleComparison> {
        let dens = spectrum.density_matrix(t)?;
        let kernels = LevelKernels::new(seq, t, self.level, tol)?;
        let chains = self.chains(seq)?;
        let n = self.len();
        let rows = exec.map(n, |a| -> Result<(f64, f64)> {
            let mut err: f64 = 0.0;
            let mut peak: f64 = 0.0;
            for b in 0..n {
                let p = kernels.eval_chains(&chains[a], &chains[b], self.level)?;
                err = err.max((dens[(a, b)] - p).abs());
                peak = peak.max(p.abs());
            }
            Ok((err, peak))
        });
        let mut max_abs: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for r in rows {
            let (e, p) = r?;
            max_abs = max_abs.max(e);
            peak = peak.max(p);
        }
        Ok(OracleComparison {
            max_abs,
            peak,
            relative: max_abs / peak,
        })
    }

    /// Relative `ℓ²` distance over target nodes between the oracle
    /// evolution `exp(-τ M⁻¹K)` and the closed-form complex kernel from
    /// node `x`.
    pub fn compare_complex_with_kernel(
        &self,
        seq: &ParameterSequences,
        spectrum: &GraphSpectrum,
        tau: ComplexTime,
        x: usize,
        tol: f64,
    ) -> Result<f64> {
        let kernels = LevelKernels::new_complex(seq, tau, self.level, tol)?;
        let chains = self.chains(seq)?;
        let mut diff = 0.0;
        let mut norm = 0.0;
        for y in 0..self.len() {
            let oracle = spectrum.density_complex(tau, x, y)?;
            let exact = kernels.eval_chains(&chains[x], &chains[y], self.level)?;
            diff += (oracle - exact).norm_sqr();
            norm += exact.norm_sqr();
        }
        Ok((diff / norm).sqrt())
    }

    fn chains(&self, seq: &ParameterSequences) -> Result<Vec<LocatedChain>> {
        self.addresses
            .iter()
            .map(|x| crate::fractal::chain_at_level(seq, x, self.level))
            .collect()
    }
}

/// Eigenpairs of the symmetrized generator.
#[derive(Debug, Clone)]
pub struct GraphSpectrum {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
    inv_sqrt_mass: DVector<f64>,
}

impl GraphSpectrum {
    fn check(&self, x: usize) -> Result<()> {
        if x >= self.values.len() {
            return Err(Error::Domain(format!("node {x} does not exist")));
        }
        Ok(())
    }

    /// `[exp(-t M⁻¹K)]_{xy} / M_y`.
    pub fn density(&self, t: f64, x: usize, y: usize) -> Result<f64> {
        require_positive("time", t)?;
        self.check(x)?;
        self.check(y)?;
        let q = &self.vectors;
        let s: f64 = (0..self.values.len())
            .map(|k| q[(x, k)] * (-t * self.values[k]).exp() * q[(y, k)])
            .sum();
        Ok(s * self.inv_sqrt_mass[x] * self.inv_sqrt_mass[y])
    }

    /// Complex-time density `[exp(-τ M⁻¹K)]_{xy} / M_y`.
    pub fn density_complex(&self, tau: ComplexTime, x: usize, y: usize) -> Result<Complex64> {
        if !(tau.re >= 0.0 && tau.re.is_finite() && tau.im.is_finite()) {
            return Err(Error::Domain(
                "complex time needs a non-negative real part".into(),
            ));
        }
        self.check(x)?;
        self.check(y)?;
        let q = &self.vectors;
        let tau = tau.as_complex();
        let s: Complex64 = (0..self.values.len())
            .map(|k| (-tau * self.values[k]).exp() * (q[(x, k)] * q[(y, k)]))
            .sum();
        Ok(s * (self.inv_sqrt_mass[x] * self.inv_sqrt_mass[y]))
    }

    /// All densities at time `t`.
    pub fn density_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        require_positive("time", t)?;
        let decay = self.values.map(|l| (-t * l).exp());
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= decay[k];
        }
        let mut out = scaled * self.vectors.transpose();
        let s = &self.inv_sqrt_mass;
        for r in 0..out.nrows() {
            for c in 0..out.ncols() {
                out[(r, c)] *= s[r] * s[c];
            }
        }
        Ok(out)
    }

    /// `Σ_x [exp(-t M⁻¹K)]_{xx}`.
    pub fn heat_trace(&self, t: f64) -> f64 {
        self.values.iter().map(|l| (-t * l).exp()).sum()
    }
}

/// Start of a random-walk population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WalkStart {
    Node(usize),
    /// Distributed according to the node masses.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkResult {
    pub walkers: usize,
    pub node_counts: Vec<u64>,
    /// Walkers per cell; a walker on a junction is assigned to one of its
    /// incident cell ends uniformly.
    pub cell_counts: Vec<u64>,
    /// `count / (walkers · mass)` per node.
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleComparison {
    pub max_abs: f64,
    pub peak: f64,
    pub relative: f64,
}

/// Oracle density at graph nodes, computed directly from one graph.
pub fn matrix_exponential_density(
    graph: &DiscreteGraph,
    t: f64,
    x: usize,
    y: usize,
) -> Result<f64> {
    graph.spectrum()?.density(t, x, y)
}

/// Empirical densities of `walkers` random walks started at `start`.
pub fn random_walk_density(
    graph: &DiscreteGraph,
    t: f64,
    start: WalkStart,
    walkers: usize,
    seed: u64,
) -> Result<WalkResult> {
    graph.random_walk(t, start, walkers, seed, Exec::default())
}
