//! Branching parameters of a generalized diamond lattice.
//!
//! Level `ℓ ≥ 1` subdivides every arc of the previous level into `j_ℓ`
//! bonds and duplicates each bond into `n_ℓ` parallel branches. The
//! cumulative products `J_i`, `N_i` fix the cell length `π / J_i` and the
//! number of cells `2 J_i N_i` at level `i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Error, Result};

/// Validated sequences `j_1..j_d`, `n_1..n_d` with their cumulative products.
///
/// `J_i` and `N_i` are kept as `u128`; construction fails with
/// [`Error::Capacity`] rather than wrapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSequences {
    j: Vec<u64>,
    n: Vec<u64>,
    cum_j: Vec<u128>,
    cum_n: Vec<u128>,
}

/// `(J_i, N_i, L_i)` at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulative {
    pub big_j: u128,
    pub big_n: u128,
    /// `π / J_i` for `i ≥ 1`; `2π` at level 0 (the whole circle is one cell).
    pub cell_length: f64,
}

/// JSON form of the parameters, either explicit lists or constant branching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ParamsConfig {
    Lists {
        j: Vec<u64>,
        n: Vec<u64>,
    },
    Constant {
        j_const: u64,
        n_const: u64,
        depth: usize,
    },
}

impl ParameterSequences {
    pub fn new(j: Vec<u64>, n: Vec<u64>) -> Result<Self> {
        if j.len() != n.len() {
            return Err(domain(format!(
                "j and n must have equal length, got {} and {}",
                j.len(),
                n.len()
            )));
        }
        for (l, (&jl, &nl)) in j.iter().zip(&n).enumerate() {
            if jl < 2 || nl < 2 {
                return Err(domain(format!(
                    "j_{0} and n_{0} must be at least 2, got j={jl}, n={nl}",
                    l + 1
                )));
            }
        }
        let mut cum_j = vec![1u128];
        let mut cum_n = vec![1u128];
        for (l, (&jl, &nl)) in j.iter().zip(&n).enumerate() {
            let overflow =
                || Error::Capacity(format!("J_i or N_i exceeds 128 bits at level {}", l + 1));
            let bj = cum_j[l].checked_mul(jl as u128).ok_or_else(overflow)?;
            let bn = cum_n[l].checked_mul(nl as u128).ok_or_else(overflow)?;
            cum_j.push(bj);
            cum_n.push(bn);
        }
        Ok(Self { j, n, cum_j, cum_n })
    }

    /// `j_ℓ = j`, `n_ℓ = n` for `1 ≤ ℓ ≤ depth`.
    pub fn constant(j: u64, n: u64, depth: usize) -> Result<Self> {
        Self::new(vec![j; depth], vec![n; depth])
    }

    pub fn from_config(config: &ParamsConfig) -> Result<Self> {
        match config {
            ParamsConfig::Lists { j, n } => Self::new(j.clone(), n.clone()),
            ParamsConfig::Constant {
                j_const,
                n_const,
                depth,
            } => Self::constant(*j_const, *n_const, *depth),
        }
    }

    /// Parse either JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ParamsConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("parameters: {e}")))?;
        Self::from_config(&config)
    }

    pub fn to_config(&self) -> ParamsConfig {
        ParamsConfig::Lists {
            j: self.j.clone(),
            n: self.n.clone(),
        }
    }

    /// Deepest level the instance supports.
    pub fn depth(&self) -> usize {
        self.j.len()
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level > self.depth() {
            Err(Error::LevelOutOfRange {
                level,
                depth: self.depth(),
            })
        } else {
            Ok(())
        }
    }

    /// `j_ℓ`, with `j_0 = 1`. Panics beyond the configured depth.
    pub fn j(&self, level: usize) -> u64 {
        if level == 0 {
            1
        } else {
            self.j[level - 1]
        }
    }

    /// `n_ℓ`, with `n_0 = 1`. Panics beyond the configured depth.
    pub fn n(&self, level: usize) -> u64 {
        if level == 0 {
            1
        } else {
            self.n[level - 1]
        }
    }

    pub fn big_j(&self, level: usize) -> u128 {
        self.cum_j[level]
    }

    pub fn big_n(&self, level: usize) -> u128 {
        self.cum_n[level]
    }

    /// Length `π / J_i` of one arc of the level-`i` subdivision of the
    /// circle. At level 0 this is `π` (the two half circles between the
    /// junctions `0` and `π`).
    pub fn arc_length(&self, level: usize) -> f64 {
        PI / self.cum_j[level] as f64
    }

    pub fn j_values(&self) -> &[u64] {
        &self.j
    }

    pub fn n_values(&self) -> &[u64] {
        &self.n
    }

    pub fn cumulative(&self, level: usize) -> Result<Cumulative> {
        self.check_level(level)?;
        let cell_length = if level == 0 {
            2.0 * PI
        } else {
            self.arc_length(level)
        };
        Ok(Cumulative {
            big_j: self.cum_j[level],
            big_n: self.cum_n[level],
            cell_length,
        })
    }

    /// `(j_ℓ, n_ℓ)` for any `ℓ ≥ 1`; levels past the configured depth
    /// repeat the last configured entry. `None` for an empty sequence.
    pub fn extended(&self, level: usize) -> Option<(u64, u64)> {
        if level == 0 {
            return Some((1, 1));
        }
        let idx = (level - 1).min(self.depth().checked_sub(1)?);
        Some((self.j[idx], self.n[idx]))
    }

    /// `(ln J_i, ln N_i)` following [`Self::extended`] past the depth.
    pub fn ln_cumulative_extended(&self, level: usize) -> Option<(f64, f64)> {
        if level <= self.depth() {
            return Some((
                (self.cum_j[level] as f64).ln(),
                (self.cum_n[level] as f64).ln(),
            ));
        }
        let (mut ln_j, mut ln_n) = self.ln_cumulative_extended(self.depth())?;
        let (jl, nl) = self.extended(self.depth() + 1)?;
        let extra = (level - self.depth()) as f64;
        ln_j += extra * (jl as f64).ln();
        ln_n += extra * (nl as f64).ln();
        Some((ln_j, ln_n))
    }

    /// Finite-horizon diagnostic for the standing convergence assumption
    /// `lim N_i e^{-J_i^2 t} < ∞`.
    ///
    /// `ok` holds when the second half of the inspected window is
    /// non-increasing. The same test is applied to the time-independent
    /// sufficient sequence `N_i e^{-J_i}`.
    pub fn check_assumption(&self, t: f64, horizon: usize) -> Result<AssumptionReport> {
        require_positive("t", t)?;
        self.check_level(horizon)?;
        let mut tail = Vec::with_capacity(horizon + 1);
        let mut ln_tail = Vec::with_capacity(horizon + 1);
        let mut time_independent = Vec::with_capacity(horizon + 1);
        let mut ln_time_independent = Vec::with_capacity(horizon + 1);
        for i in 0..=horizon {
            let big_j = self.cum_j[i] as f64;
            let big_n = self.cum_n[i] as f64;
            tail.push(big_n * (-(big_j * big_j) * t).exp());
            ln_tail.push(big_n.ln() - big_j * big_j * t);
            time_independent.push(big_n * (-big_j).exp());
            ln_time_independent.push(big_n.ln() - big_j);
        }
        Ok(AssumptionReport {
            t,
            ok: tail_settles(&ln_tail),
            tail,
            time_independent_ok: tail_settles(&ln_time_independent),
            time_independent,
        })
    }
}

fn tail_settles(ln_values: &[f64]) -> bool {
    let steps = ln_values.len().saturating_sub(1);
    let inspect = steps.div_ceil(2);
    ln_values[ln_values.len() - inspect - 1..]
        .windows(2)
        .all(|w| w[1] <= w[0])
}

/// Outcome of [`ParameterSequences::check_assumption`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub t: f64,
    /// `N_i e^{-J_i^2 t}` for `i = 0..=horizon`.
    pub tail: Vec<f64>,
    pub ok: bool,
    /// `N_i e^{-J_i}` for `i = 0..=horizon`.
    pub time_independent: Vec<f64>,
    pub time_independent_ok: bool,
}

/// Hausdorff dimension `1 + log n / log j` of the fractal with constant
/// branching `(j, n)`.
///
/// When `j` and `n` are integer powers of a common base the ratio of
/// logarithms is returned as an exact rational, so `(2, 4)` gives exactly 3.
pub fn hausdorff_dimension(j: u64, n: u64) -> Result<f64> {
    if j < 2 {
        return Err(domain(format!("j must be at least 2, got {j}")));
    }
    if n < 1 {
        return Err(domain(format!("n must be at least 1, got {n}")));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let (base, pj) = primitive_root(j);
    if let Some(pn) = integer_log(n, base) {
        return Ok(1.0 + pn as f64 / pj as f64);
    }
    Ok(1.0 + (n as f64).ln() / (j as f64).ln())
}

/// Smallest `b` with `x = b^p`, returned with `p`.
fn primitive_root(x: u64) -> (u64, u32) {
    let max_p = 63 - x.leading_zeros();
    for p in (2..=max_p).rev() {
        let guess = (x as f64).powf(1.0 / p as f64).round() as u64;
        for b in guess.saturating_sub(1).max(2)..=guess + 1 {
            if b.checked_pow(p) == Some(x) {
                return (b, p);
            }
        }
    }
    (x, 1)
}

fn integer_log(x: u64, base: u64) -> Option<u32> {
    let mut acc = 1u64;
    let mut p = 0;
    while acc < x {
        acc = acc.checked_mul(base)?;
        p += 1;
    }
    (acc == x).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_products_match_figure_parameters() {
        let seq = ParameterSequences::new(vec![3, 2], vec![3, 3]).unwrap();
        let c = seq.cumulative(2).unwrap();
        assert_eq!((c.big_j, c.big_n), (6, 9));
        assert_eq!(c.cell_length, PI / 6.0);
    }

    #[test]
    fn level_zero_is_empty_product() {
        let seq = ParameterSequences::constant(5, 7, 3).unwrap();
        let c = seq.cumulative(0).unwrap();
        assert_eq!((c.big_j, c.big_n, c.cell_length), (1, 1, 2.0 * PI));
    }

    #[test]
    fn binary_lattice_level_three() {
        let seq = ParameterSequences::constant(2, 2, 3).unwrap();
        let c = seq.cumulative(3).unwrap();
        assert_eq!((c.big_j, c.big_n), (8, 8));
        assert_eq!(c.cell_length, PI / 8.0);
    }

    #[test]
    fn rejects_bad_entries_and_levels() {
        assert!(matches!(
            ParameterSequences::new(vec![2, 1], vec![2, 2]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ParameterSequences::new(vec![2], vec![2, 2]),
            Err(Error::Domain(_))
        ));
        let seq = ParameterSequences::constant(2, 2, 2).unwrap();
        assert_eq!(
            seq.cumulative(3),
            Err(Error::LevelOutOfRange { level: 3, depth: 2 })
        );
    }

    #[test]
    fn overflow_is_a_capacity_error() {
        assert!(ParameterSequences::constant(2, 2, 127).is_ok());
        assert!(matches!(
            ParameterSequences::constant(2, 2, 128),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            ParameterSequences::constant(1 << 40, 2, 4),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn json_forms() {
        let a = ParameterSequences::from_json(r#"{"j":[2,3],"n":[2,2]}"#).unwrap();
        assert_eq!(a.big_j(2), 6);
        let b = ParameterSequences::from_json(r#"{"j_const":2,"n_const":3,"depth":4}"#).unwrap();
        assert_eq!(b.big_n(4), 81);
        assert!(matches!(
            ParameterSequences::from_json(r#"{"j":[2]}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn assumption_binary_lattice() {
        let seq = ParameterSequences::constant(2, 2, 6).unwrap();
        let r = seq.check_assumption(1.0, 6).unwrap();
        assert!(r.ok);
        for (i, v) in r.tail.iter().enumerate() {
            let expect = 2f64.powi(i as i32) * (-(4f64.powi(i as i32))).exp();
            assert_eq!(*v, expect);
        }
        assert!(r.time_independent_ok);
    }

    #[test]
    fn assumption_fails_for_doubly_exponential_branching() {
        // n_i = 2^(2^i) grows faster than exp(J_i^2 t) for small t
        let n: Vec<u64> = (1..=5).map(|i| 1u64 << (1u32 << i)).collect();
        let seq = ParameterSequences::new(vec![2; 5], n).unwrap();
        let r = seq.check_assumption(1e-3, 5).unwrap();
        // independent check: ln N_i - 4^i t strictly grows across the window
        let ln: Vec<f64> = (0..=5)
            .map(|i| ((1u64 << ((2u32 << i) - 2).min(63)) as f64).ln() - 4f64.powi(i) * 1e-3)
            .collect();
        assert!(ln.windows(2).skip(1).all(|w| w[1] > w[0]));
        assert!(!r.ok);
    }

    #[test]
    fn assumption_horizon_zero() {
        let seq = ParameterSequences::constant(3, 3, 2).unwrap();
        let r = seq.check_assumption(0.7, 0).unwrap();
        assert_eq!(r.tail, vec![(-0.7f64).exp()]);
        assert!(r.ok);
        assert!(matches!(
            seq.check_assumption(0.0, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff_dimension(2, 2).unwrap(), 2.0);
        assert_eq!(hausdorff_dimension(2, 1).unwrap(), 1.0);
        assert_eq!(hausdorff_dimension(2, 4).unwrap(), 3.0);
        assert_eq!(hausdorff_dimension(4, 8).unwrap(), 2.5);
        assert!((hausdorff_dimension(3, 2).unwrap() - (1.0 + 2f64.ln() / 3f64.ln())).abs() < 1e-15);
        assert!(hausdorff_dimension(1, 2).is_err());
    }

    #[test]
    fn hausdorff_monotone() {
        for j in 2..12u64 {
            for n in 2..12u64 {
                let d = hausdorff_dimension(j, n).unwrap();
                assert!(hausdorff_dimension(j, n + 1).unwrap() > d);
                assert!(hausdorff_dimension(j + 1, n).unwrap() < d);
            }
        }
    }

    #[test]
    fn extension_repeats_last_entry() {
        let seq = ParameterSequences::new(vec![2, 3], vec![4, 5]).unwrap();
        assert_eq!(seq.extended(7), Some((3, 5)));
        let (lj, ln) = seq.ln_cumulative_extended(4).unwrap();
        assert!((lj - 54f64.ln()).abs() < 1e-12);
        assert!((ln - 500f64.ln()).abs() < 1e-12);
    }
}
