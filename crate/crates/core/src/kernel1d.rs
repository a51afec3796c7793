//! One-dimensional heat kernels: the circle `S¹ = [0, 2π)` and the interval
//! `[0, L]` with Dirichlet ends, for real time `t > 0` and complex time
//! `τ = ε + i t` with `ε > 0`.
//!
//! Each kernel has two series. The spectral (eigenfunction) series converges
//! fast for large times, the image (Poisson summation) series for small
//! ones. Both are truncated at the first index where a certified bound on
//! the discarded terms drops below the requested absolute tolerance:
//!
//! - spectral: `Σ_{k≥K} e^{-k²a} ≤ e^{-K²a} / (1 - e^{-(2K+1)a})`;
//! - images: `Σ_{n≥0} g(A + n d) ≤ g(A) (1 + 2t/(A d))` for the Gaussian
//!   `g(x) = (4πt)^{-1/2} e^{-x²/4t}`, from the Mills-ratio bound.
//!
//! For complex time the moduli of the terms are bounded through
//! `|e^{-k²τ}| = e^{-k²ε}` and `|e^{-x²/4τ}| = e^{-x²/(4|τ|²/ε)}`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Error, Result};

const TWO_PI: f64 = 2.0 * PI;
const MAX_TERMS: usize = 1_000_000;
/// Steps of the rotation recurrence between exact re-evaluations of `cos kΔ`.
const RESYNC: usize = 32;

/// Which series to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spectral,
    Images,
    /// Images below the crossover `t (π/L)² = 1`, spectral above. For
    /// complex time, whichever series needs fewer terms.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Absolute truncation tolerance.
    pub tol: f64,
    pub method: Method,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            method: Method::Auto,
        }
    }
}

impl EvalOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    fn validate(&self) -> Result<()> {
        require_positive("tolerance", self.tol)
    }
}

/// Complex time `ε + i t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexTime {
    pub re: f64,
    pub im: f64,
}

impl ComplexTime {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn validate(self) -> Result<Complex64> {
        if !(self.re.is_finite() && self.im.is_finite()) {
            return Err(domain(format!(
                "non-finite complex time {}+{}i",
                self.re, self.im
            )));
        }
        if self.re <= 0.0 {
            return Err(domain(format!(
                "complex time needs a positive real part, got {}",
                self.re
            )));
        }
        Ok(self.as_complex())
    }
}

/// Scalar type of kernel values: `f64` for real time, `Complex64` for
/// complex time.
pub trait KernelValue:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + std::fmt::Debug
    + 'static
{
    fn from_real(x: f64) -> Self;
    fn zero() -> Self {
        Self::from_real(0.0)
    }
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self;
    /// Real part.
    fn real(self) -> f64;
    fn modulus(self) -> f64;
}

impl KernelValue for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn recip(self) -> Self {
        f64::recip(self)
    }
    fn real(self) -> f64 {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl KernelValue for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn recip(self) -> Self {
        self.inv()
    }
    fn real(self) -> f64 {
        self.re
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Bound on `Σ_{k≥K} e^{-k² a}`.
pub fn spectral_tail(k: usize, a: f64) -> f64 {
    let k = k as f64;
    (-k * k * a).exp() / -(-(2.0 * k + 1.0) * a).exp_m1()
}

/// Bound on `Σ_{n≥0} (4π t)^{-1/2} e^{-(A + n d)²/4t}` for `A > 0`.
pub fn gaussian_tail(a: f64, d: f64, t: f64) -> f64 {
    (4.0 * PI * t).sqrt().recip() * (-a * a / (4.0 * t)).exp() * (1.0 + 2.0 * t / (a * d))
}

/// Smallest `K` such that `scale · Σ_{k>K} e^{-k² a} ≤ tol`.
fn spectral_terms(a: f64, scale: f64, tol: f64) -> Result<(usize, f64)> {
    let guess = ((scale / tol).ln().max(0.0) / a).sqrt().floor() as usize;
    let mut k = guess.saturating_sub(1);
    while k > 0 && scale * spectral_tail(k, a) <= tol {
        k -= 1;
    }
    loop {
        let bound = scale * spectral_tail(k + 1, a);
        if bound <= tol {
            return Ok((k, bound));
        }
        k += 1;
        if k > MAX_TERMS {
            return Err(Error::Capacity(format!(
                "spectral series needs more than {MAX_TERMS} terms at rate {a:e}"
            )));
        }
    }
}

/// Smallest window `M ≥ min` such that `bound(M) ≤ tol`.
fn image_terms(min: usize, tol: f64, bound: impl Fn(usize) -> f64) -> Result<(usize, f64)> {
    let mut m = min;
    loop {
        let b = bound(m);
        if b <= tol {
            return Ok((m, b));
        }
        m += 1;
        if m > MAX_TERMS {
            return Err(Error::Capacity("image series does not converge".into()));
        }
    }
}

/// `e^{-k² s}` for `k = 1..=K`, by two multiplicative recurrences.
fn spectral_coefficients<V: KernelValue>(s: V, count: usize) -> Vec<V> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let ratio_step = (s * -2.0).exp();
    let mut ratio = (s * -3.0).exp();
    let mut term = (s * -1.0).exp();
    for k in 1..=count {
        if k % RESYNC == 0 {
            let kf = k as f64;
            term = (s * -(kf * kf)).exp();
            ratio = (s * -(2.0 * kf + 1.0)).exp();
        }
        out.push(term);
        term = term * ratio;
        ratio = ratio * ratio_step;
    }
    out
}

/// `Σ_k c_k cos(k Δ)` and the same sum at `Δ'`, computed together.
fn cosine_sums<V: KernelValue>(coef: &[V], d1: f64, d2: f64) -> (V, V) {
    let (s1, c1) = d1.sin_cos();
    let (s2, c2) = d2.sin_cos();
    let (mut ca, mut sa) = (c1, s1);
    let (mut cb, mut sb) = (c2, s2);
    let mut acc1 = V::zero();
    let mut acc2 = V::zero();
    for (idx, &c) in coef.iter().enumerate() {
        let k = idx + 1;
        if k % RESYNC == 0 {
            (sa, ca) = (k as f64 * d1).sin_cos();
            (sb, cb) = (k as f64 * d2).sin_cos();
        }
        acc1 = acc1 + c * ca;
        acc2 = acc2 + c * cb;
        (ca, sa) = (ca * c1 - sa * s1, sa * c1 + ca * s1);
        (cb, sb) = (cb * c2 - sb * s2, sb * c2 + cb * s2);
    }
    (acc1, acc2)
}

fn cosine_sum<V: KernelValue>(coef: &[V], d: f64) -> V {
    let (s1, c1) = d.sin_cos();
    let (mut c, mut s) = (c1, s1);
    let mut acc = V::zero();
    for (idx, &w) in coef.iter().enumerate() {
        let k = idx + 1;
        if k % RESYNC == 0 {
            (s, c) = (k as f64 * d).sin_cos();
        }
        acc = acc + w * c;
        (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
    }
    acc
}

/// Series actually summed by a prepared kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolved {
    Spectral,
    Images,
}

#[derive(Debug, Clone)]
enum Plan<V> {
    Spectral {
        coef: Vec<V>,
    },
    Images {
        window: usize,
        prefactor: V,
        inv_four_tau: V,
    },
}

/// Moduli needed by the truncation bounds.
#[derive(Debug, Clone, Copy)]
struct TimeScales {
    /// `Re τ`: decay rate of the spectral terms.
    dissipation: f64,
    /// `|τ|² / Re τ`: effective width of the image Gaussians.
    width: f64,
    /// `|τ|`.
    modulus: f64,
}

fn time_scales<V: KernelValue>(tau: V) -> TimeScales {
    let modulus = tau.modulus();
    let dissipation = tau.real();
    TimeScales {
        dissipation,
        width: modulus * modulus / dissipation,
        modulus,
    }
}

fn warn_precision(tol: f64, peak: f64) {
    if tol < 16.0 * f64::EPSILON * peak {
        log::warn!(
            "tolerance {tol:e} is below the rounding level of values near {peak:e}; \
             the certificate covers truncation only"
        );
    }
}

/// Circle kernel at a fixed time, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CircleKernel<V> {
    plan: Plan<V>,
    truncation: f64,
}

impl<V: KernelValue> CircleKernel<V> {
    fn prepare(tau: V, opts: &EvalOptions) -> Result<Self> {
        opts.validate()?;
        let sc = time_scales(tau);
        let spectral =
            || -> Result<(usize, f64)> { spectral_terms(sc.dissipation, 1.0 / PI, opts.tol) };
        let images = || -> Result<(usize, f64)> {
            let scale = (sc.width / sc.modulus).sqrt();
            image_terms(0, opts.tol, |m| {
                2.0 * scale * gaussian_tail((2 * m + 1) as f64 * PI, TWO_PI, sc.width)
            })
        };
        let use_spectral = match opts.method {
            Method::Spectral => true,
            Method::Images => false,
            Method::Auto if sc.modulus == sc.dissipation => sc.dissipation >= 1.0,
            Method::Auto => {
                let k = spectral().map(|r| r.0).unwrap_or(usize::MAX);
                let m = images().map(|r| 2 * r.0 + 1).unwrap_or(usize::MAX);
                k <= m
            }
        };
        warn_precision(
            opts.tol,
            1.0 / TWO_PI + (4.0 * PI * sc.modulus).sqrt().recip(),
        );
        if use_spectral {
            let (k, bound) = spectral()?;
            Ok(Self {
                plan: Plan::Spectral {
                    coef: spectral_coefficients(tau, k),
                },
                truncation: bound,
            })
        } else {
            let (window, bound) = images()?;
            Ok(Self {
                plan: Plan::Images {
                    window,
                    prefactor: (tau * (4.0 * PI)).sqrt().recip(),
                    inv_four_tau: (tau * 4.0).recip(),
                },
                truncation: bound,
            })
        }
    }

    /// Kernel value at angles `θ1`, `θ2` (radians).
    pub fn eval(&self, theta1: f64, theta2: f64) -> V {
        match &self.plan {
            Plan::Spectral { coef } => {
                V::from_real(1.0 / TWO_PI) + cosine_sum(coef, theta2 - theta1) * (1.0 / PI)
            }
            Plan::Images {
                window,
                prefactor,
                inv_four_tau,
            } => {
                let mut delta = (theta2 - theta1).rem_euclid(TWO_PI);
                if delta > PI {
                    delta -= TWO_PI;
                }
                let w = *window as i64;
                let mut acc = V::zero();
                for m in -w..=w {
                    let x = delta + TWO_PI * m as f64;
                    acc = acc + (*inv_four_tau * -(x * x)).exp();
                }
                *prefactor * acc
            }
        }
    }

    /// Certified bound on the discarded terms.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation
    }

    pub fn method(&self) -> Resolved {
        match self.plan {
            Plan::Spectral { .. } => Resolved::Spectral,
            Plan::Images { .. } => Resolved::Images,
        }
    }

    /// Number of series terms summed per evaluation.
    pub fn terms(&self) -> usize {
        match &self.plan {
            Plan::Spectral { coef } => coef.len() + 1,
            Plan::Images { window, .. } => 2 * window + 1,
        }
    }
}

impl CircleKernel<f64> {
    pub fn new(t: f64, opts: &EvalOptions) -> Result<Self> {
        require_positive("time", t)?;
        Self::prepare(t, opts)
    }
}

impl CircleKernel<Complex64> {
    pub fn new_complex(tau: ComplexTime, opts: &EvalOptions) -> Result<Self> {
        Self::prepare(tau.validate()?, opts)
    }
}

/// Dirichlet interval kernel at a fixed time and length.
#[derive(Debug, Clone)]
pub struct DirichletKernel<V> {
    length: f64,
    plan: Plan<V>,
    truncation: f64,
}

impl<V: KernelValue> DirichletKernel<V> {
    fn prepare(tau: V, length: f64, opts: &EvalOptions) -> Result<Self> {
        opts.validate()?;
        require_positive("interval length", length)?;
        let sc = time_scales(tau);
        let rate = (PI / length).powi(2);
        let spectral = || -> Result<(usize, f64)> {
            spectral_terms(sc.dissipation * rate, 2.0 / length, opts.tol)
        };
        let images = || -> Result<(usize, f64)> {
            let scale = (sc.width / sc.modulus).sqrt();
            image_terms(1, opts.tol, |m| {
                4.0 * scale * gaussian_tail(2.0 * m as f64 * length, 2.0 * length, sc.width)
            })
        };
        let use_spectral = match opts.method {
            Method::Spectral => true,
            Method::Images => false,
            Method::Auto if sc.modulus == sc.dissipation => sc.dissipation * rate >= 1.0,
            Method::Auto => {
                let k = spectral().map(|r| r.0).unwrap_or(usize::MAX);
                let m = images().map(|r| 2 * (2 * r.0 + 1)).unwrap_or(usize::MAX);
                k <= m
            }
        };
        warn_precision(
            opts.tol,
            2.0 / length + (4.0 * PI * sc.modulus).sqrt().recip(),
        );
        if use_spectral {
            let (k, bound) = spectral()?;
            Ok(Self {
                length,
                plan: Plan::Spectral {
                    coef: spectral_coefficients(tau * rate, k),
                },
                truncation: bound,
            })
        } else {
            let (window, bound) = images()?;
            Ok(Self {
                length,
                plan: Plan::Images {
                    window,
                    prefactor: (tau * (4.0 * PI)).sqrt().recip(),
                    inv_four_tau: (tau * 4.0).recip(),
                },
                truncation: bound,
            })
        }
    }

    /// Kernel value at `θ1, θ2 ∈ [0, L]`.
    ///
    /// Arguments may overshoot `L` by a relative `1e-12` to absorb rounding
    /// of local coordinates; they are clamped.
    pub fn eval(&self, theta1: f64, theta2: f64) -> Result<V> {
        let x = self.check(theta1)?;
        let y = self.check(theta2)?;
        Ok(self.eval_unchecked(x, y))
    }

    fn check(&self, theta: f64) -> Result<f64> {
        let slack = 1e-12 * self.length;
        if !(theta >= -slack && theta <= self.length + slack) {
            return Err(domain(format!(
                "angle {theta} outside [0, {}]",
                self.length
            )));
        }
        Ok(theta.clamp(0.0, self.length))
    }

    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> V {
        let l = self.length;
        if x == 0.0 || y == 0.0 || x == l || y == l {
            return V::zero();
        }
        match &self.plan {
            Plan::Spectral { coef } => {
                let (a, b) = cosine_sums(coef, PI * (x - y) / l, PI * (x + y) / l);
                (a - b) * (1.0 / l)
            }
            Plan::Images {
                window,
                prefactor,
                inv_four_tau,
            } => {
                let w = *window as i64;
                let mut acc = V::zero();
                for m in -w..=w {
                    let shift = 2.0 * l * m as f64;
                    let d = x - y + shift;
                    let s = x + y + shift;
                    acc = acc + (*inv_four_tau * -(d * d)).exp() - (*inv_four_tau * -(s * s)).exp();
                }
                *prefactor * acc
            }
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn truncation_bound(&self) -> f64 {
        self.truncation
    }

    pub fn method(&self) -> Resolved {
        match self.plan {
            Plan::Spectral { .. } => Resolved::Spectral,
            Plan::Images { .. } => Resolved::Images,
        }
    }

    pub fn terms(&self) -> usize {
        match &self.plan {
            Plan::Spectral { coef } => coef.len(),
            Plan::Images { window, .. } => 2 * (2 * window + 1),
        }
    }
}

impl DirichletKernel<f64> {
    pub fn new(t: f64, length: f64, opts: &EvalOptions) -> Result<Self> {
        require_positive("time", t)?;
        Self::prepare(t, length, opts)
    }
}

impl DirichletKernel<Complex64> {
    pub fn new_complex(tau: ComplexTime, length: f64, opts: &EvalOptions) -> Result<Self> {
        Self::prepare(tau.validate()?, length, opts)
    }
}

fn check_angles(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(domain("non-finite angle"))
    }
}

/// Heat kernel of the unit circle,
/// `1/2π + (1/π) Σ_{k≥1} e^{-k²t} cos(k(θ2-θ1))`.
pub fn circle_kernel(t: f64, theta1: f64, theta2: f64, opts: &EvalOptions) -> Result<f64> {
    check_angles(theta1, theta2)?;
    Ok(CircleKernel::new(t, opts)?.eval(theta1, theta2))
}

/// Heat kernel of `[0, L]` with Dirichlet ends,
/// `(2/L) Σ_{k≥1} e^{-k²π²t/L²} sin(kπθ1/L) sin(kπθ2/L)`.
pub fn dirichlet_kernel(
    t: f64,
    length: f64,
    theta1: f64,
    theta2: f64,
    opts: &EvalOptions,
) -> Result<f64> {
    DirichletKernel::new(t, length, opts)?.eval(theta1, theta2)
}

/// Circle kernel at complex time `ε + i t`.
pub fn circle_kernel_complex(
    tau: ComplexTime,
    theta1: f64,
    theta2: f64,
    opts: &EvalOptions,
) -> Result<Complex64> {
    check_angles(theta1, theta2)?;
    Ok(CircleKernel::new_complex(tau, opts)?.eval(theta1, theta2))
}

/// Dirichlet interval kernel at complex time `ε + i t`.
pub fn dirichlet_kernel_complex(
    tau: ComplexTime,
    length: f64,
    theta1: f64,
    theta2: f64,
    opts: &EvalOptions,
) -> Result<Complex64> {
    DirichletKernel::new_complex(tau, length, opts)?.eval(theta1, theta2)
}
