//! Words, cells and bundles of the inverse-limit system.
//!
//! A point of `F_i` is a word `η w_1 … w_ℓ`: a base angle on the circle
//! plus one branch label per level. Generic points carry a label for every
//! level; a junction created at level `ℓ` (its angle lies in `ϑ_ℓ`) carries
//! only `ℓ - 1` labels because the identification at level `ℓ` merges all
//! deeper branches.
//!
//! Angles that may be junctions are kept as exact rationals of `π`;
//! arbitrary real angles are treated as generic points.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use num_integer::Integer;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterSequences;

const TWO_PI: f64 = 2.0 * PI;

/// An angle on the circle `[0, 2π)`.
#[derive(Debug, Clone, Copy)]
pub enum Angle {
    /// `π · num / den`, reduced, with `0 ≤ num < 2 den`.
    Exact { num: u128, den: u128 },
    /// Radians in `[0, 2π)`.
    Real(f64),
}

impl Angle {
    /// `π · num / den` reduced modulo `2π`.
    pub fn exact(num: u128, den: u128) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidAddress("zero denominator".into()));
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        let two_den = den
            .checked_mul(2)
            .ok_or_else(|| Error::Capacity("angle denominator too large".into()))?;
        Ok(Angle::Exact {
            num: num % two_den,
            den,
        })
    }

    /// Real angle in radians, wrapped into `[0, 2π)`.
    pub fn real(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::InvalidAddress(format!("non-finite angle {radians}")));
        }
        let mut r = radians.rem_euclid(TWO_PI);
        if r >= TWO_PI {
            r = 0.0;
        }
        Ok(Angle::Real(r))
    }

    pub fn radians(&self) -> f64 {
        match *self {
            Angle::Exact { num, den } => PI * (num as f64) / (den as f64),
            Angle::Real(r) => r,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Angle::Exact { .. })
    }

    fn checked_add(&self, other: &Angle) -> Result<Angle> {
        match (*self, *other) {
            (Angle::Exact { num: a, den: b }, Angle::Exact { num: c, den: d }) => {
                let l = b.lcm(&d);
                let overflow = || Error::Capacity("angle arithmetic overflow".into());
                let lhs = a.checked_mul(l / b).ok_or_else(overflow)?;
                let rhs = c.checked_mul(l / d).ok_or_else(overflow)?;
                Angle::exact(lhs.checked_add(rhs).ok_or_else(overflow)?, l)
            }
            _ => Angle::real(self.radians() + other.radians()),
        }
    }
}

impl PartialEq for Angle {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Angle::Exact { num: a, den: b }, Angle::Exact { num: c, den: d }) => a == c && b == d,
            (Angle::Real(a), Angle::Real(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Exact { num, den } => write!(f, "{num}/{den}"),
            Angle::Real(r) => write!(f, "{r}"),
        }
    }
}

/// A point of `F_i` or of the limit space, written as a word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AddressRepr", into = "AddressRepr")]
pub struct Address {
    pub eta: Angle,
    pub branches: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct AddressRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_num: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_den: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_real: Option<f64>,
    #[serde(default)]
    w: Vec<u32>,
}

impl TryFrom<AddressRepr> for Address {
    type Error = Error;

    fn try_from(r: AddressRepr) -> Result<Self> {
        let eta = match (r.eta_num, r.eta_den, r.eta_real) {
            (Some(num), Some(den), _) => Angle::exact(num, den)?,
            (None, None, Some(x)) => Angle::real(x)?,
            _ => {
                return Err(Error::Parse(
                    "address needs eta_num and eta_den, or eta_real".into(),
                ))
            }
        };
        Ok(Address { eta, branches: r.w })
    }
}

impl From<Address> for AddressRepr {
    fn from(a: Address) -> Self {
        match a.eta {
            Angle::Exact { num, den } => AddressRepr {
                eta_num: Some(num),
                eta_den: Some(den),
                eta_real: Some(a.eta.radians()),
                w: a.branches,
            },
            Angle::Real(r) => AddressRepr {
                eta_num: None,
                eta_den: None,
                eta_real: Some(r),
                w: a.branches,
            },
        }
    }
}

impl Address {
    pub fn new(eta: Angle, branches: Vec<u32>) -> Self {
        Self { eta, branches }
    }

    /// Point at angle `π · num / den` with the given labels.
    pub fn exact(num: u128, den: u128, branches: Vec<u32>) -> Result<Self> {
        Ok(Self {
            eta: Angle::exact(num, den)?,
            branches,
        })
    }

    /// Point at a real angle (radians) with the given labels.
    pub fn real(radians: f64, branches: Vec<u32>) -> Result<Self> {
        Ok(Self {
            eta: Angle::real(radians)?,
            branches,
        })
    }

    /// Length of the word, i.e. the number of branch labels.
    pub fn level(&self) -> usize {
        self.branches.len()
    }
}

/// The `i`-cell containing a point: arc `k` of the level-`i` subdivision
/// (base angle `π k / J_i`) together with the labels `w_1 … w_i`.
///
/// At level 0 the only cell is the whole circle, written `ø` (arc 0, no
/// labels). Ordering is lexicographic in (level, base angle, labels).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellWord {
    pub level: usize,
    pub arc: u128,
    pub branches: Vec<u32>,
}

impl CellWord {
    pub fn whole_circle() -> Self {
        Self {
            level: 0,
            arc: 0,
            branches: Vec::new(),
        }
    }

    /// Starting junction angle `π k / J_i` of the cell.
    pub fn base(&self, seq: &ParameterSequences) -> Angle {
        if self.level == 0 {
            return Angle::Exact { num: 0, den: 1 };
        }
        Angle::exact(self.arc, seq.big_j(self.level)).expect("nonzero J")
    }
}

impl fmt::Display for CellWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            return write!(f, "ø");
        }
        write!(f, "{}", self.arc)?;
        for w in &self.branches {
            write!(f, ".{w}")?;
        }
        Ok(())
    }
}

/// Local coordinate of a point inside its cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCoord {
    /// Offset from the cell's starting junction, in `[0, L_i)`.
    pub theta: Angle,
    pub cell: CellWord,
}

impl CellCoord {
    /// Global base angle `base + θ` of the point.
    pub fn global_angle(&self, seq: &ParameterSequences) -> Result<Angle> {
        self.cell.base(seq).checked_add(&self.theta)
    }
}

/// Relative position of two points at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PairConfig {
    /// Cells in different bundles.
    DifferentBundle,
    /// Different cells of the same bundle.
    SameBundleDifferentStrand,
    /// The same cell.
    SameStrand,
}

/// Result of [`deepest_common_bundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CommonBundle {
    pub level: usize,
    /// True when the points still share a cell at the cap, so the true
    /// index may be larger.
    pub saturated: bool,
}

/// Junction angles introduced at one level, and all junction angles up to it.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionAngles {
    pub new: Vec<Angle>,
    pub cumulative: Vec<Angle>,
}

/// `ϑ_i` and `∪_{ℓ≤i} ϑ_ℓ`.
pub fn junction_angles(seq: &ParameterSequences, level: usize) -> Result<JunctionAngles> {
    seq.check_level(level)?;
    let big_j = seq.big_j(level);
    let j = seq.j(level) as u128;
    let count = 2 * big_j;
    if count > 1 << 24 {
        return Err(Error::Capacity(format!(
            "{count} junction angles at level {level}"
        )));
    }
    let mut new = Vec::new();
    let mut cumulative = Vec::with_capacity(count as usize);
    for k in 0..count {
        let a = Angle::exact(k, big_j)?;
        cumulative.push(a);
        let fresh = if level == 0 { true } else { k % j != 0 };
        if fresh {
            new.push(a);
        }
    }
    Ok(JunctionAngles { new, cumulative })
}

/// Level `ℓ` at which the angle becomes a junction, if within the depth.
pub fn junction_level(seq: &ParameterSequences, eta: &Angle) -> Option<usize> {
    match *eta {
        Angle::Exact { den, .. } => (0..=seq.depth()).find(|&l| seq.big_j(l).is_multiple_of(den)),
        Angle::Real(_) => None,
    }
}

/// Check label ranges and the word-length convention for junctions.
pub fn validate(seq: &ParameterSequences, x: &Address) -> Result<()> {
    if x.level() > seq.depth() {
        return Err(Error::InvalidAddress(format!(
            "{} labels exceed the configured depth {}",
            x.level(),
            seq.depth()
        )));
    }
    for (l, &w) in x.branches.iter().enumerate() {
        let n = seq.n(l + 1);
        if w < 1 || w as u64 > n {
            return Err(Error::InvalidAddress(format!(
                "label w_{} = {w} not in 1..={n}",
                l + 1
            )));
        }
    }
    if let Some(l) = junction_level(seq, &x.eta) {
        let max = l.saturating_sub(1);
        if x.level() > max {
            return Err(Error::InvalidAddress(format!(
                "junction of level {l} carries {} labels, at most {max} allowed",
                x.level()
            )));
        }
    }
    Ok(())
}

/// Number of labels needed to name the point at `level`.
pub fn required_labels(seq: &ParameterSequences, x: &Address, level: usize) -> usize {
    match junction_level(seq, &x.eta) {
        Some(l) if l <= level => l.saturating_sub(1),
        _ => level,
    }
}

fn ensure_labels(seq: &ParameterSequences, x: &Address, level: usize) -> Result<()> {
    let need = required_labels(seq, x, level);
    if x.level() < need {
        return Err(Error::AddressTooShort {
            have: x.level(),
            need,
            level,
        });
    }
    Ok(())
}

/// Truncate the word to at most `k` labels (`φ_{ik}`, or `Φ_k` for limit points).
pub fn project(x: &Address, k: usize) -> Address {
    let keep = x.level().min(k);
    Address {
        eta: x.eta,
        branches: x.branches[..keep].to_vec(),
    }
}

/// Index `⌊η J_i / π⌋` of the level-`i` arc containing the angle.
pub fn arc_index(seq: &ParameterSequences, eta: &Angle, level: usize) -> Result<u128> {
    let big_j = seq.big_j(level);
    match *eta {
        Angle::Exact { num, den } => Ok(num
            .checked_mul(big_j)
            .ok_or_else(|| Error::Capacity("arc index overflow".into()))?
            / den),
        Angle::Real(r) => {
            let k = (r * big_j as f64 / PI).floor().max(0.0) as u128;
            Ok(k.min(2 * big_j - 1))
        }
    }
}

/// Offset of the angle from the start of arc `arc` at `level`.
fn arc_offset(seq: &ParameterSequences, eta: &Angle, level: usize, arc: u128) -> Result<Angle> {
    let big_j = seq.big_j(level);
    match *eta {
        Angle::Exact { num, den } => {
            let overflow = || Error::Capacity("angle arithmetic overflow".into());
            let scaled = num.checked_mul(big_j).ok_or_else(overflow)?;
            let rem = scaled - arc * den;
            Angle::exact(rem, den.checked_mul(big_j).ok_or_else(overflow)?)
        }
        Angle::Real(r) => {
            let l = seq.arc_length(level);
            let theta = (r - arc as f64 * l).clamp(0.0, l * (1.0 - f64::EPSILON));
            Ok(Angle::Real(theta))
        }
    }
}

/// Cell and local coordinate of `x` at `level`.
///
/// Junction points are placed at `θ = 0` of the lexicographically smallest
/// cell starting at them: the cell based at the junction angle, with labels
/// `w_1 … w_{ℓ-1}` followed by ones.
pub fn locate(seq: &ParameterSequences, x: &Address, level: usize) -> Result<CellCoord> {
    seq.check_level(level)?;
    validate(seq, x)?;
    ensure_labels(seq, x, level)?;
    if level == 0 {
        return Ok(CellCoord {
            theta: x.eta,
            cell: CellWord::whole_circle(),
        });
    }
    let arc = arc_index(seq, &x.eta, level)?;
    let theta = arc_offset(seq, &x.eta, level, arc)?;
    let mut branches: Vec<u32> = x.branches.iter().copied().take(level).collect();
    branches.resize(level, 1);
    Ok(CellCoord {
        theta,
        cell: CellWord {
            level,
            arc,
            branches,
        },
    })
}

/// All cells starting at the same junction as the cell of `x` and sharing
/// its labels `w_1 … w_{i-1}`: the `n_i` strands of its bundle.
pub fn bundle(seq: &ParameterSequences, x: &Address, level: usize) -> Result<Vec<CellWord>> {
    let own = locate(seq, x, level)?.cell;
    if level == 0 {
        return Ok(vec![own]);
    }
    Ok((1..=seq.n(level) as u32)
        .map(|w| {
            let mut branches = own.branches.clone();
            branches[level - 1] = w;
            CellWord {
                level,
                arc: own.arc,
                branches,
            }
        })
        .collect())
}

/// Classify the pair `(x, y)` at `level`.
pub fn classify_pair(
    seq: &ParameterSequences,
    x: &Address,
    y: &Address,
    level: usize,
) -> Result<PairConfig> {
    let cx = locate(seq, x, level)?.cell;
    let cy = locate(seq, y, level)?.cell;
    Ok(classify_cells(&cx, &cy))
}

fn classify_cells(cx: &CellWord, cy: &CellWord) -> PairConfig {
    if cx == cy {
        return PairConfig::SameStrand;
    }
    let i = cx.level;
    if i >= 1 && cx.arc == cy.arc && cx.branches[..i - 1] == cy.branches[..i - 1] {
        PairConfig::SameBundleDifferentStrand
    } else {
        PairConfig::DifferentBundle
    }
}

/// Deepest level `i ≤ cap` at which `x` and `y` lie in cells of one bundle.
///
/// Bundles nest, so the scan stops at the first level where the pair
/// separates. If the points still share a cell at `cap` the result is
/// flagged as saturated.
pub fn deepest_common_bundle(
    seq: &ParameterSequences,
    x: &Address,
    y: &Address,
    cap: usize,
) -> Result<CommonBundle> {
    seq.check_level(cap)?;
    for level in 1..=cap {
        match classify_pair(seq, x, y, level)? {
            PairConfig::DifferentBundle => {
                return Ok(CommonBundle {
                    level: level - 1,
                    saturated: false,
                })
            }
            PairConfig::SameBundleDifferentStrand => {
                return Ok(CommonBundle {
                    level,
                    saturated: false,
                })
            }
            PairConfig::SameStrand => {}
        }
    }
    Ok(CommonBundle {
        level: cap,
        saturated: true,
    })
}

/// Mixed-radix code of `w_1 … w_i` with `w_i` least significant, so the
/// strands of a bundle occupy consecutive codes.
pub fn label_code(seq: &ParameterSequences, branches: &[u32]) -> u128 {
    branches.iter().enumerate().fold(0u128, |acc, (l, &w)| {
        acc * seq.n(l + 1) as u128 + (w - 1) as u128
    })
}

/// Inverse of [`label_code`] at `level`.
pub fn labels_from_code(seq: &ParameterSequences, level: usize, mut code: u128) -> Vec<u32> {
    let mut out = vec![0u32; level];
    for l in (1..=level).rev() {
        let n = seq.n(l) as u128;
        out[l - 1] = (code % n) as u32 + 1;
        code /= n;
    }
    out
}

/// Every cell of `F_i` in canonical order (arc, then labels).
pub fn enumerate_cells(seq: &ParameterSequences, level: usize) -> Result<Vec<CellWord>> {
    seq.check_level(level)?;
    if level == 0 {
        return Ok(vec![CellWord::whole_circle()]);
    }
    let arcs = 2 * seq.big_j(level);
    let labels = seq.big_n(level);
    let total = arcs
        .checked_mul(labels)
        .filter(|&c| c <= 1 << 24)
        .ok_or_else(|| Error::Capacity(format!("too many cells at level {level}")))?;
    let mut out = Vec::with_capacity(total as usize);
    for arc in 0..arcs {
        for code in 0..labels {
            out.push(CellWord {
                level,
                arc,
                branches: labels_from_code(seq, level, code),
            });
        }
    }
    Ok(out)
}

/// Identity of a junction of `F_i`: the angle index `k` (angle `π k / J_i`)
/// and the labels that survive the identification.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct JunctionKey {
    pub angle_index: u128,
    pub prefix: Vec<u32>,
}

/// Junction at angle index `k` (mod `2 J_i`) reached from a cell carrying
/// `branches`. A junction created at level `ℓ` keeps only `w_1 … w_{ℓ-1}`.
pub fn junction_key(
    seq: &ParameterSequences,
    level: usize,
    k: u128,
    branches: &[u32],
) -> JunctionKey {
    let big_j = seq.big_j(level);
    let k = k % (2 * big_j);
    let created = (0..=level)
        .find(|&l| k.is_multiple_of(big_j / seq.big_j(l)))
        .unwrap_or(level);
    JunctionKey {
        angle_index: k,
        prefix: branches[..created.saturating_sub(1)].to_vec(),
    }
}

/// Random point with uniform angle and uniform labels up to `depth`.
pub fn sample_point<R: Rng + ?Sized>(
    seq: &ParameterSequences,
    rng: &mut R,
    depth: usize,
) -> Result<Address> {
    seq.check_level(depth)?;
    let eta = rng.random::<f64>() * TWO_PI;
    let branches = (1..=depth)
        .map(|l| rng.random_range(1..=seq.n(l) as u32))
        .collect();
    Ok(Address {
        eta: Angle::real(eta)?,
        branches,
    })
}

/// [`sample_point`] driven by a ChaCha stream seeded with `seed`.
pub fn sample_point_seeded(seq: &ParameterSequences, seed: u64, depth: usize) -> Result<Address> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_point(seq, &mut rng, depth)
}

/// Per-level arc indices and local coordinates of one point, precomputed
/// for repeated kernel evaluations.
#[derive(Debug, Clone)]
pub struct LocatedChain {
    pub eta: f64,
    /// `arcs[k-1]`, `thetas[k-1]` describe level `k`.
    arcs: Vec<u128>,
    thetas: Vec<f64>,
    /// Labels padded with ones past a junction's word length.
    labels: Vec<u32>,
    junction: Option<usize>,
}

impl LocatedChain {
    /// Locate `x` at every level `1..=cap` for which it carries enough labels.
    pub fn new(seq: &ParameterSequences, x: &Address, cap: usize) -> Result<Self> {
        seq.check_level(cap)?;
        validate(seq, x)?;
        let junction = junction_level(seq, &x.eta);
        let available = match junction {
            Some(l) if x.level() >= l.saturating_sub(1) => cap,
            _ => x.level(),
        };
        let levels = cap.min(available);
        let mut arcs = Vec::with_capacity(levels);
        let mut thetas = Vec::with_capacity(levels);
        for level in 1..=levels {
            let arc = arc_index(seq, &x.eta, level)?;
            arcs.push(arc);
            thetas.push(arc_offset(seq, &x.eta, level, arc)?.radians());
        }
        let mut labels: Vec<u32> = x.branches.iter().copied().take(levels).collect();
        labels.resize(levels, 1);
        Ok(Self {
            eta: x.eta.radians(),
            arcs,
            thetas,
            labels,
            junction,
        })
    }

    /// Number of levels located.
    pub fn levels(&self) -> usize {
        self.arcs.len()
    }

    pub fn theta(&self, level: usize) -> f64 {
        self.thetas[level - 1]
    }

    pub fn arc(&self, level: usize) -> u128 {
        self.arcs[level - 1]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Level at which the point is a junction, if it is one within the depth.
    pub fn junction_level(&self) -> Option<usize> {
        self.junction
    }

    /// Configuration of the pair at `level` (`1 ≤ level ≤ levels()` of both).
    pub fn config_at(&self, other: &LocatedChain, level: usize) -> PairConfig {
        if self.arcs[level - 1] != other.arcs[level - 1]
            || self.labels[..level - 1] != other.labels[..level - 1]
        {
            PairConfig::DifferentBundle
        } else if self.labels[level - 1] == other.labels[level - 1] {
            PairConfig::SameStrand
        } else {
            PairConfig::SameBundleDifferentStrand
        }
    }

    /// Deepest common bundle level up to `cap`, in `O(cap)`.
    ///
    /// Fails when one of the chains runs out of located levels before the
    /// pair separates.
    pub fn common_bundle(&self, other: &LocatedChain, cap: usize) -> Result<CommonBundle> {
        let first_label_diff = self
            .labels
            .iter()
            .zip(&other.labels)
            .position(|(a, b)| a != b)
            .unwrap_or(usize::MAX);
        for level in 1..=cap {
            let reach = self.levels().min(other.levels());
            if level > reach {
                return Err(Error::AddressTooShort {
                    have: reach,
                    need: level,
                    level,
                });
            }
            if self.arcs[level - 1] != other.arcs[level - 1] || first_label_diff < level - 1 {
                return Ok(CommonBundle {
                    level: level - 1,
                    saturated: false,
                });
            }
            if first_label_diff == level - 1 {
                return Ok(CommonBundle {
                    level,
                    saturated: false,
                });
            }
        }
        Ok(CommonBundle {
            level: cap,
            saturated: true,
        })
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.radians().partial_cmp(&other.radians())
    }
}
