//! Heat kernels on `F_i` and on the limit space.
//!
//! The level-`i` kernel is the circle kernel of the base angles plus one
//! Dirichlet correction per level `k ≤ i`:
//!
//! ```text
//! p_t^{F_i}(x, y) = p_t^{F_{i-1}}(x, y) + c_i N_{i-1} p_t^{[0, L_i]}(θ_x, θ_y)
//! ```
//!
//! with `c_i = 0` for points in different bundles, `-1` for different
//! strands of one bundle and `n_i - 1` for the same strand. Once a pair
//! separates into different bundles every deeper coefficient vanishes, so
//! the sum stops at the deepest common bundle level `i_*`.
//!
//! Every one-dimensional evaluation gets the absolute tolerance
//! `tol / (depth + 1)`. The budget does not depend on the requested level,
//! which makes the values for all levels `≥ i_*` identical bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, require_positive, Error, Result};
use crate::geometry::{
    classify_pair, locate, project, Address, CommonBundle, LocatedChain, PairConfig,
};
use crate::kernel1d::{
    CircleKernel, ComplexTime, DirichletKernel, EvalOptions, KernelValue, Method,
};
use crate::params::ParameterSequences;

/// One Dirichlet term of the kernel sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correction<V> {
    pub level: usize,
    pub config: PairConfig,
    /// `c_k N_{k-1}`.
    pub weight: f64,
    /// The term added at this level.
    pub term: V,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelResult<V> {
    pub value: V,
    /// Deepest level whose correction was summed.
    pub levels_used: usize,
    /// Deepest common bundle level found (the level cap when saturated).
    pub i_star: usize,
    /// The pair still shared a cell at the last level examined.
    pub saturated: bool,
    /// Certified bound on the distance to the limit kernel; zero for
    /// finite-level requests and for pairs that separate within the depth.
    pub tail_bound: f64,
    pub correction_trace: Vec<Correction<V>>,
}

/// Level at which a kernel is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LevelSpec {
    Finite(usize),
    Limit,
}

/// Real or complex time of a request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Time {
    Real(f64),
    /// `ε + i t`.
    Complex(ComplexTime),
}

/// A full evaluation request for [`evaluate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRequest {
    pub x: Address,
    pub y: Address,
    pub time: Time,
    pub level: LevelSpec,
    pub tol: f64,
}

/// Result of [`evaluate`], real or complex according to the request.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnyKernelResult {
    Real(KernelResult<f64>),
    Complex(KernelResult<Complex64>),
}

pub fn evaluate(seq: &ParameterSequences, req: &KernelRequest) -> Result<AnyKernelResult> {
    let (x, y, tol) = (&req.x, &req.y, req.tol);
    Ok(match (req.time, req.level) {
        (Time::Real(t), LevelSpec::Finite(i)) => {
            AnyKernelResult::Real(heat_kernel_level(seq, i, x, y, t, tol)?)
        }
        (Time::Real(t), LevelSpec::Limit) => {
            AnyKernelResult::Real(heat_kernel_limit(seq, x, y, t, tol)?)
        }
        (Time::Complex(tau), LevelSpec::Finite(i)) => {
            AnyKernelResult::Complex(schrodinger_kernel_level(seq, i, x, y, tau.im, tau.re, tol)?)
        }
        (Time::Complex(tau), LevelSpec::Limit) => {
            AnyKernelResult::Complex(schrodinger_kernel(seq, x, y, tau.im, Some(tau.re), tol)?)
        }
    })
}

fn configuration_weight(seq: &ParameterSequences, level: usize, config: PairConfig) -> f64 {
    let coefficient = match config {
        PairConfig::DifferentBundle => 0.0,
        PairConfig::SameBundleDifferentStrand => -1.0,
        PairConfig::SameStrand => (seq.n(level) - 1) as f64,
    };
    coefficient * seq.big_n(level - 1) as f64
}

/// The one-dimensional kernels of levels `0..=cap` at one time, prepared
/// for many evaluations.
#[derive(Debug, Clone)]
pub struct LevelKernels<V> {
    seq: ParameterSequences,
    circle: CircleKernel<V>,
    /// `dirichlet[k - 1]` lives on `[0, L_k]`.
    dirichlet: Vec<DirichletKernel<V>>,
    weights: Vec<f64>,
    per_call_tol: f64,
}

impl<V: KernelValue> LevelKernels<V> {
    fn build(
        seq: &ParameterSequences,
        cap: usize,
        tol: f64,
        circle: impl Fn(&EvalOptions) -> Result<CircleKernel<V>>,
        dirichlet: impl Fn(f64, &EvalOptions) -> Result<DirichletKernel<V>>,
    ) -> Result<Self> {
        seq.check_level(cap)?;
        require_positive("tolerance", tol)?;
        let per_call_tol = tol / (seq.depth() + 1) as f64;
        let opts = EvalOptions {
            tol: per_call_tol,
            method: Method::Auto,
        };
        let dirichlet = (1..=cap)
            .map(|k| dirichlet(seq.arc_length(k), &opts))
            .collect::<Result<Vec<_>>>()?;
        let weights = (1..=cap).map(|k| seq.big_n(k - 1) as f64).collect();
        Ok(Self {
            seq: seq.clone(),
            circle: circle(&opts)?,
            dirichlet,
            weights,
            per_call_tol,
        })
    }

    pub fn cap(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn per_call_tol(&self) -> f64 {
        self.per_call_tol
    }

    pub fn circle(&self) -> &CircleKernel<V> {
        &self.circle
    }

    pub fn dirichlet(&self, level: usize) -> &DirichletKernel<V> {
        &self.dirichlet[level - 1]
    }

    fn weight(&self, level: usize, config: PairConfig) -> f64 {
        let coefficient = match config {
            PairConfig::DifferentBundle => 0.0,
            PairConfig::SameBundleDifferentStrand => -1.0,
            PairConfig::SameStrand => (self.seq.n(level) - 1) as f64,
        };
        coefficient * self.weights[level - 1]
    }

    /// Kernel at `level` for two located points, summing corrections up to
    /// `min(level, i_*)`. Both chains must reach `level`.
    pub fn eval_chains(&self, x: &LocatedChain, y: &LocatedChain, level: usize) -> Result<V> {
        let (value, _, _) = self.sum(x, y, level, false)?;
        Ok(value)
    }

    fn sum(
        &self,
        x: &LocatedChain,
        y: &LocatedChain,
        level: usize,
        trace: bool,
    ) -> Result<(V, CommonBundle, Vec<Correction<V>>)> {
        if level > self.cap() {
            return Err(Error::LevelOutOfRange {
                level,
                depth: self.cap(),
            });
        }
        let common = x.common_bundle(y, level)?;
        let mut value = self.circle.eval(x.eta, y.eta);
        let mut corrections = Vec::new();
        for k in 1..=common.level {
            let config = x.config_at(y, k);
            let weight = self.weight(k, config);
            let term = self.dirichlet[k - 1].eval_unchecked(x.theta(k), y.theta(k)) * weight;
            value = value + term;
            if trace {
                corrections.push(Correction {
                    level: k,
                    config,
                    weight,
                    term,
                });
            }
        }
        Ok((value, common, corrections))
    }

    fn level_result(&self, x: &Address, y: &Address, level: usize) -> Result<KernelResult<V>> {
        let cx = chain_at_level(&self.seq, x, level)?;
        let cy = chain_at_level(&self.seq, y, level)?;
        let (value, common, correction_trace) = self.sum(&cx, &cy, level, true)?;
        Ok(KernelResult {
            value,
            levels_used: common.level,
            i_star: common.level,
            saturated: common.saturated,
            tail_bound: 0.0,
            correction_trace,
        })
    }

    fn limit_result(
        &self,
        x: &Address,
        y: &Address,
        tail_time: f64,
        tol: f64,
    ) -> Result<KernelResult<V>> {
        let cx = LocatedChain::new(&self.seq, x, self.cap())?;
        let cy = LocatedChain::new(&self.seq, y, self.cap())?;
        let reach = cx.levels().min(cy.levels());
        let (value, common, correction_trace) = self.sum(&cx, &cy, reach, true)?;
        let tail_bound = if !common.saturated {
            0.0
        } else if [cx.junction_level(), cy.junction_level()]
            .iter()
            .any(|j| matches!(j, Some(l) if *l <= reach))
        {
            // local coordinate 0 at every deeper level: all further terms vanish
            0.0
        } else {
            tail_sum(&self.seq, reach, tail_time)
        };
        if tail_bound > tol {
            return Err(Error::InsufficientDepth {
                achieved: tail_bound,
                tol,
                depth: self.seq.depth(),
            });
        }
        Ok(KernelResult {
            value,
            levels_used: common.level,
            i_star: common.level,
            saturated: common.saturated,
            tail_bound,
            correction_trace,
        })
    }
}

impl LevelKernels<f64> {
    pub fn new(seq: &ParameterSequences, t: f64, cap: usize, tol: f64) -> Result<Self> {
        require_positive("time", t)?;
        Self::build(
            seq,
            cap,
            tol,
            |o| CircleKernel::new(t, o),
            |l, o| DirichletKernel::new(t, l, o),
        )
    }
}

impl LevelKernels<Complex64> {
    pub fn new_complex(
        seq: &ParameterSequences,
        tau: ComplexTime,
        cap: usize,
        tol: f64,
    ) -> Result<Self> {
        Self::build(
            seq,
            cap,
            tol,
            |o| CircleKernel::new_complex(tau, o),
            |l, o| DirichletKernel::new_complex(tau, l, o),
        )
    }
}

/// Locate a point at every level up to `level`, requiring enough labels.
pub fn chain_at_level(seq: &ParameterSequences, x: &Address, level: usize) -> Result<LocatedChain> {
    let chain = LocatedChain::new(seq, x, level)?;
    if chain.levels() < level {
        let need = crate::geometry::required_labels(seq, x, level);
        return Err(Error::AddressTooShort {
            have: x.level(),
            need,
            level,
        });
    }
    Ok(chain)
}

/// `p_t^{F_i}(x, y)` by the unrolled sum over levels `≤ min(i, i_*)`.
pub fn heat_kernel_level(
    seq: &ParameterSequences,
    level: usize,
    x: &Address,
    y: &Address,
    t: f64,
    tol: f64,
) -> Result<KernelResult<f64>> {
    LevelKernels::new(seq, t, level, tol)?.level_result(x, y, level)
}

/// `p_t^{F_i}(x, y)` by the level recursion on projected points, located
/// afresh at every level.
pub fn heat_kernel_level_recursive(
    seq: &ParameterSequences,
    level: usize,
    x: &Address,
    y: &Address,
    t: f64,
    tol: f64,
) -> Result<f64> {
    seq.check_level(level)?;
    require_positive("time", t)?;
    require_positive("tolerance", tol)?;
    let opts = EvalOptions::with_tol(tol / (seq.depth() + 1) as f64);
    recurse(seq, level, x, y, t, &opts)
}

fn recurse(
    seq: &ParameterSequences,
    level: usize,
    x: &Address,
    y: &Address,
    t: f64,
    opts: &EvalOptions,
) -> Result<f64> {
    if level == 0 {
        return crate::kernel1d::circle_kernel(t, x.eta.radians(), y.eta.radians(), opts);
    }
    let coarse = recurse(
        seq,
        level - 1,
        &project(x, level - 1),
        &project(y, level - 1),
        t,
        opts,
    )?;
    let config = classify_pair(seq, x, y, level)?;
    if config == PairConfig::DifferentBundle {
        return Ok(coarse);
    }
    let tx = locate(seq, x, level)?.theta.radians();
    let ty = locate(seq, y, level)?.theta.radians();
    let d = crate::kernel1d::dirichlet_kernel(t, seq.arc_length(level), tx, ty, opts)?;
    Ok(coarse + configuration_weight(seq, level, config) * d)
}

/// `p_t^{F_∞}(x, y)`.
///
/// Pairs that separate within the configured depth are exact at level
/// `i_*`. Pairs that still share a cell at the deepest level their words
/// reach are truncated there, and the tail `Σ_{i>cap} N_i J_i (1 + 1/(J_i² t)) e^{-J_i² t}`
/// is returned as `tail_bound`. Levels past the depth repeat the last
/// configured `(j, n)`.
pub fn heat_kernel_limit(
    seq: &ParameterSequences,
    x: &Address,
    y: &Address,
    t: f64,
    tol: f64,
) -> Result<KernelResult<f64>> {
    LevelKernels::new(seq, t, seq.depth(), tol)?.limit_result(x, y, t, tol)
}

/// `N_i J_i (1 + 1/(J_i² t)) e^{-J_i² t}`, a bound on
/// `sup_{x,y} |p_t^{F_i}(x, y) - p_t^{F_{i-1}}(x, y)|`.
pub fn uniform_bound(seq: &ParameterSequences, level: usize, t: f64) -> Result<f64> {
    require_positive("time", t)?;
    seq.check_level(level)?;
    if level == 0 {
        return Err(domain("the uniform bound starts at level 1"));
    }
    Ok(ln_uniform_bound(seq, level, t).exp())
}

fn ln_uniform_bound(seq: &ParameterSequences, level: usize, t: f64) -> f64 {
    let (ln_j, ln_n) = seq.ln_cumulative_extended(level).expect("depth ≥ 1");
    let decay = (2.0 * ln_j).exp() * t;
    ln_n + ln_j + (1.0 / decay).ln_1p() - decay
}

/// Certified bound on `Σ_{i>cap} uniform_bound(i, t)`.
///
/// Terms are summed explicitly until the configured levels are exhausted
/// and the successive ratio bound `n j e^{-(j²-1) J_i² t}` of the repeated
/// tail drops below one; the rest is a geometric series, added once it is
/// negligible against the partial sum.
pub fn tail_sum(seq: &ParameterSequences, cap: usize, t: f64) -> f64 {
    if seq.depth() == 0 {
        return f64::INFINITY;
    }
    let (j, n) = seq.extended(seq.depth() + 1).expect("depth ≥ 1");
    let (jf, nf) = (j as f64, n as f64);
    let mut total = 0.0;
    for level in cap + 1..cap + 10_000 {
        let ln_b = ln_uniform_bound(seq, level, t);
        total += ln_b.exp();
        if level >= seq.depth() {
            let (ln_j, _) = seq.ln_cumulative_extended(level).expect("depth ≥ 1");
            let ln_ratio = (nf * jf).ln() - (jf * jf - 1.0) * (2.0 * ln_j).exp() * t;
            if ln_ratio < 0.0 {
                let ratio = ln_ratio.exp();
                let rest = (ln_b + ln_ratio).exp() / (1.0 - ratio);
                if rest <= 1e-9 * total || rest < f64::MIN_POSITIVE {
                    return total + rest;
                }
            }
        }
    }
    f64::INFINITY
}

/// Default regularization `ε = 10⁻³ |t|`.
pub fn default_regularization(t: f64) -> f64 {
    1e-3 * t.abs()
}

fn regularized_time(t: f64, eps: Option<f64>) -> Result<ComplexTime> {
    if !t.is_finite() {
        return Err(domain(format!("non-finite time {t}")));
    }
    let eps = eps.unwrap_or_else(|| default_regularization(t));
    require_positive("regularization", eps)?;
    Ok(ComplexTime::new(eps, t))
}

/// Free Schrödinger kernel `p_{ε + i t}` on the limit space.
///
/// Saturated pairs carry the tail of the uniform bound at time `ε`, which
/// bounds the moduli of the complex corrections.
pub fn schrodinger_kernel(
    seq: &ParameterSequences,
    x: &Address,
    y: &Address,
    t: f64,
    eps: Option<f64>,
    tol: f64,
) -> Result<KernelResult<Complex64>> {
    let tau = regularized_time(t, eps)?;
    LevelKernels::new_complex(seq, tau, seq.depth(), tol)?.limit_result(x, y, tau.re, tol)
}

/// Free Schrödinger kernel `p_{ε + i t}` on `F_i`.
pub fn schrodinger_kernel_level(
    seq: &ParameterSequences,
    level: usize,
    x: &Address,
    y: &Address,
    t: f64,
    eps: f64,
    tol: f64,
) -> Result<KernelResult<Complex64>> {
    let tau = regularized_time(t, Some(eps))?;
    LevelKernels::new_complex(seq, tau, level, tol)?.level_result(x, y, level)
}

/// `∫ p_t^{F_i}(x, x) μ_i(dx)` predicted by the kernel: the circle trace plus
/// the traces of the same-strand corrections.
pub fn heat_trace(seq: &ParameterSequences, level: usize, t: f64) -> Result<f64> {
    seq.check_level(level)?;
    require_positive("time", t)?;
    // circle trace: Σ_k e^{-k² t} over k ∈ ℤ
    let circle: f64 = 1.0
        + 2.0
            * (1..)
                .map(|k: i32| (-(k as f64).powi(2) * t).exp())
                .take_while(|v| *v > 1e-18)
                .sum::<f64>();
    let mut total = circle;
    for k in 1..=level {
        let l = seq.arc_length(k);
        // ∫_0^L p^D(θ, θ) dθ = Σ_m e^{-m²π² t/L²}; cells of level k: 2 J_k N_k, mass L_k/N_k each
        let dir: f64 = (1..)
            .map(|m: i32| (-(m as f64 * PI / l).powi(2) * t).exp())
            .take_while(|v| *v > 1e-18)
            .sum();
        let cells = 2.0 * seq.big_j(k) as f64 * seq.big_n(k) as f64;
        let weight = configuration_weight(seq, k, PairConfig::SameStrand);
        total += weight * cells * dir / seq.big_n(k) as f64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_point;
    use crate::kernel1d::{circle_kernel, dirichlet_kernel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binary(depth: usize) -> ParameterSequences {
        ParameterSequences::constant(2, 2, depth).unwrap()
    }

    #[test]
    fn bound_value() {
        let b = uniform_bound(&binary(3), 1, 1.0).unwrap();
        assert!((b - 5.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!(uniform_bound(&binary(3), 0, 1.0).is_err());
    }

    #[test]
    fn first_level_cases() {
        let s = ParameterSequences::new(vec![3], vec![3]).unwrap();
        let t = 0.2;
        let o = EvalOptions::with_tol(1e-13);
        let x = Address::real(0.35, vec![1]).unwrap();
        let y2 = Address::real(0.6, vec![3]).unwrap();
        let y3 = Address::real(0.7, vec![1]).unwrap();
        let y1 = Address::real(3.5, vec![1]).unwrap();
        let l = PI / 3.0;
        let c = |a: f64, b: f64| circle_kernel(t, a, b, &o).unwrap();
        let d = |a: f64, b: f64| dirichlet_kernel(t, l, a, b, &o).unwrap();
        let v2 = heat_kernel_level(&s, 1, &x, &y2, t, 1e-12).unwrap();
        assert!((v2.value - (c(0.35, 0.6) - d(0.35, 0.6))).abs() < 1e-12);
        let v3 = heat_kernel_level(&s, 1, &x, &y3, t, 1e-12).unwrap();
        assert!((v3.value - (c(0.35, 0.7) + 2.0 * d(0.35, 0.7))).abs() < 1e-12);
        let v1 = heat_kernel_level(&s, 1, &x, &y1, t, 1e-12).unwrap();
        assert_eq!(
            v1.value,
            heat_kernel_level(&s, 0, &x, &y1, t, 1e-12).unwrap().value
        );
        assert_eq!(v1.correction_trace.len(), 0);
    }

    #[test]
    fn recursion_matches_unrolled_sum() {
        let s = ParameterSequences::new(vec![2, 3, 2, 2], vec![3, 2, 2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tol = 1e-11;
        for _ in 0..100 {
            let x = sample_point(&s, &mut rng, 4).unwrap();
            let mut y = sample_point(&s, &mut rng, 4).unwrap();
            if rng.random_bool(0.5) {
                y.eta = x.eta;
                y.branches[..2].copy_from_slice(&x.branches[..2]);
            }
            for level in 0..=4 {
                for &t in &[0.01, 0.3] {
                    let a = heat_kernel_level(&s, level, &x, &y, t, tol).unwrap().value;
                    let b = heat_kernel_level_recursive(&s, level, &x, &y, t, tol).unwrap();
                    assert!((a - b).abs() <= (level + 1) as f64 * tol);
                }
            }
        }
    }

    use rand::Rng;

    #[test]
    fn separated_pairs_stabilize() {
        let s = binary(4);
        let x = Address::real(0.3, vec![1, 2, 1, 1]).unwrap();
        let y = Address::real(0.5, vec![2, 2, 1, 1]).unwrap();
        let base = heat_kernel_level(&s, 1, &x, &y, 0.1, 1e-12).unwrap();
        assert_eq!(base.i_star, 1);
        for i in 2..=4 {
            assert_eq!(
                heat_kernel_level(&s, i, &x, &y, 0.1, 1e-12).unwrap().value,
                base.value
            );
        }
        let lim = heat_kernel_limit(&s, &x, &y, 0.1, 1e-12).unwrap();
        assert_eq!(lim.value, base.value);
        assert_eq!(lim.tail_bound, 0.0);
        assert!(!lim.saturated);
    }

    #[test]
    fn diagonal_limit_is_certified() {
        let s = binary(4);
        let x = Address::real(0.3, vec![1, 2, 1, 1]).unwrap();
        let r = heat_kernel_limit(&s, &x, &x, 1.0, 1e-10).unwrap();
        assert!(r.saturated);
        assert!(r.tail_bound < 1e-10);
        let loose =
            heat_kernel_limit(&binary(2), &project(&x, 2), &project(&x, 2), 0.3, 1e-6).unwrap();
        assert!(loose.tail_bound > 0.0 && loose.tail_bound < 1e-6);
        let err = heat_kernel_limit(&binary(1), &project(&x, 1), &project(&x, 1), 0.001, 1e-10);
        assert!(matches!(err, Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn tail_sum_dominates_explicit_terms() {
        let s = binary(8);
        let short = binary(2);
        for &t in &[0.01, 0.1, 1.0] {
            let explicit: f64 = (3..=8).map(|i| uniform_bound(&s, i, t).unwrap()).sum();
            assert!(tail_sum(&short, 2, t) >= explicit);
            assert!(tail_sum(&short, 2, t) <= explicit * (1.0 + 1e-9) + tail_sum(&s, 8, t) * 1.01);
        }
    }

    #[test]
    fn junction_pairs_have_zero_tail() {
        let s = binary(3);
        let x = Address::exact(1, 4, vec![2]).unwrap();
        let r = heat_kernel_limit(&s, &x, &x, 0.01, 1e-10).unwrap();
        assert_eq!(r.tail_bound, 0.0);
        // created at level 2, so every term from level 2 on vanishes at θ = 0
        assert_eq!(r.correction_trace[1].term, 0.0);
        assert_eq!(r.correction_trace[2].term, 0.0);
        let one = heat_kernel_level(&s, 1, &x, &x, 0.01, 1e-10).unwrap();
        assert_eq!(r.value, one.value);
    }

    #[test]
    fn schrodinger_basics() {
        let s = binary(3);
        let x = Address::real(0.3, vec![1, 2, 1]).unwrap();
        let y = Address::real(0.4, vec![1, 2, 1]).unwrap();
        let a = schrodinger_kernel(&s, &x, &y, 0.3, Some(0.05), 1e-10).unwrap();
        let b = schrodinger_kernel(&s, &x, &y, -0.3, Some(0.05), 1e-10).unwrap();
        assert!((a.value - b.value.conj()).norm() < 1e-12);
        let r = schrodinger_kernel_level(&s, 2, &x, &y, 1e-9, 0.2, 1e-11).unwrap();
        let h = heat_kernel_level(&s, 2, &x, &y, 0.2, 1e-11).unwrap();
        assert!((r.value.re - h.value).abs() < 1e-7);
        assert!(schrodinger_kernel(&s, &x, &y, 0.3, Some(0.0), 1e-10).is_err());
    }

    #[test]
    fn request_dispatch() {
        let s = binary(2);
        let x = Address::real(0.3, vec![1, 2]).unwrap();
        let req = KernelRequest {
            x: x.clone(),
            y: x,
            time: Time::Real(0.5),
            level: LevelSpec::Finite(2),
            tol: 1e-10,
        };
        assert!(matches!(
            evaluate(&s, &req).unwrap(),
            AnyKernelResult::Real(_)
        ));
    }
}
