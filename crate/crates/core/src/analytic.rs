//! Special functions, the exact law of one spherical coordinate, and the
//! closed-form bound functionals.
//!
//! Everything here is deterministic. The gamma-function family is built on a
//! shifted Stirling series; ratios `Γ(x+a)/Γ(x)` get their own routine so that
//! large arguments (`x ~ 2^19`) do not lose digits to cancellation.

use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::hadamard::Dimension;
use crate::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// Arguments below this are shifted upward before the Stirling series is used.
const STIRLING_MIN: f64 = 10.0;

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-15;
const CF_TINY: f64 = 1e-300;

/// Stirling correction `ln Γ(z) - [(z - 1/2) ln z - z + ln(2π)/2]` for `z >= 10`.
fn stirling_tail(z: f64) -> f64 {
    // B_{2k} / (2k (2k-1)), k = 1..7
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let zi = 1.0 / z;
    let z2 = zi * zi;
    let mut acc = 0.0;
    for &c in C.iter().rev() {
        acc = acc * z2 + c;
    }
    acc * zi
}

fn shift_count(x: f64) -> usize {
    if x >= STIRLING_MIN {
        0
    } else {
        (STIRLING_MIN - x).ceil() as usize
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    let n = shift_count(x);
    let z = x + n as f64;
    let shifted = (z - 0.5) * z.ln() - z + HALF_LN_2PI + stirling_tail(z);
    let correction: f64 = (0..n).map(|i| (x + i as f64).ln()).sum();
    Ok(shifted - correction)
}

/// `ln Γ(x + a) - ln Γ(x)` for `x > 0` and `x + a > 0`.
pub fn log_gamma_ratio(x: f64, a: f64) -> Result<f64> {
    let y = x + a;
    if !(x > 0.0) || !(y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!(
            "log_gamma_ratio requires x > 0 and x + a > 0, got x = {x}, a = {a}"
        )));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let n = shift_count(x.min(y));
    let correction: f64 = (0..n).map(|i| (a / (x + i as f64)).ln_1p()).sum();
    let x = x + n as f64;
    let y = x + a;
    let main = (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a;
    Ok(main + stirling_tail(y) - stirling_tail(x) - correction)
}

/// `ln B(a, b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "log_beta requires a, b > 0, got {a}, {b}"
        )));
    }
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    Ok(log_gamma(small)? - log_gamma_ratio(large, small)?)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "incomplete beta requires a, b > 0, got a = {a}, b = {b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "incomplete beta requires x in [0, 1], got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - log_beta(a, b)?;
    let front = ln_front.exp();
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        Ok(gamma_series(a, x)?)
    } else {
        Ok(1.0 - gamma_continued_fraction(a, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_series(a, x)?)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !(x >= 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "incomplete gamma requires a > 0 and x >= 0, got a = {a}, x = {x}"
        )));
    }
    Ok(())
}

fn gamma_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..CF_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * CF_EPS {
            break;
        }
    }
    Ok(sum * (-x + a * x.ln() - log_gamma(a)?).exp())
}

fn gamma_continued_fraction(a: f64, x: f64) -> Result<f64> {
    if x.is_infinite() {
        return Ok(0.0);
    }
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    Ok((-x + a * x.ln() - log_gamma(a)?).exp() * h)
}

/// Standard normal CDF `Φ(z)`.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    if z == f64::INFINITY {
        return 1.0;
    }
    // erfc(|z|/√2) = Q(1/2, z²/2); arguments are always in domain.
    let q = regularized_gamma_q(0.5, 0.5 * z * z).unwrap_or(0.0);
    if z < 0.0 {
        0.5 * q
    } else {
        1.0 - 0.5 * q
    }
}

/// CDF of `N(0, variance)` at `t`.
pub fn gaussian_cdf(t: f64, variance: f64) -> f64 {
    normal_cdf(t / variance.sqrt())
}

fn require_d_at_least_2(dim: Dimension) -> Result<f64> {
    if dim.get() < 2 {
        return Err(Error::Domain(format!("requires d >= 2, got d = {dim}")));
    }
    Ok(dim.as_f64())
}

/// CDF of one coordinate of a uniform point on `S^(d-1)`.
///
/// With `S_1^2 ~ Beta(1/2, (d-1)/2)` and `S_1` symmetric,
/// `F(t) = (1 + sign(t) I_{t²}(1/2, (d-1)/2)) / 2` on `(-1, 1)`.
pub fn sphere_coordinate_cdf(t: f64, dim: Dimension) -> Result<f64> {
    let d = require_d_at_least_2(dim)?;
    if t.is_nan() {
        return Err(Error::Domain("sphere_coordinate_cdf at NaN".into()));
    }
    if t <= -1.0 {
        return Ok(0.0);
    }
    if t >= 1.0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let i = regularized_incomplete_beta(0.5, 0.5 * (d - 1.0), t * t)?;
    Ok(if t > 0.0 {
        0.5 * (1.0 + i)
    } else {
        0.5 * (1.0 - i)
    })
}

/// `E|S_1| = Γ(d/2) / (√π Γ((d+1)/2))` for a uniform point on `S^(d-1)`.
pub fn sphere_coordinate_abs_mean(dim: Dimension) -> Result<f64> {
    let d = require_d_at_least_2(dim)?;
    Ok((-log_gamma_ratio(0.5 * d, 0.5)? - LN_SQRT_PI).exp())
}

/// `m_d = sqrt(2/π) sqrt(d/(d-1))`, an upper bound on `E[|X|_1 / sqrt(d)]`.
pub fn m_d(dim: Dimension) -> Result<f64> {
    let d = require_d_at_least_2(dim)?;
    Ok((FRAC_2_PI * d / (d - 1.0)).sqrt())
}

/// `1 - exp(-z)` without cancellation for small `z`.
#[inline]
pub fn one_minus_exp_neg(z: f64) -> f64 {
    -(-z).exp_m1()
}

/// An admissible `(d, t)` pair for the Wasserstein lower bound:
/// `0 <= t <= 1 - m_d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    dim: Dimension,
    t: f64,
}

impl BoundParams {
    pub fn new(dim: Dimension, t: f64) -> Result<Self> {
        let max = 1.0 - m_d(dim)?;
        if !(t >= 0.0 && t <= max) {
            return Err(Error::Inadmissible { t, max });
        }
        Ok(Self { dim, t })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// `sqrt(2 (1 - m_d - t)) (1 - exp(-(d-1) t² / 2))`.
pub fn wasserstein_lower_bound(p: &BoundParams) -> f64 {
    let d = p.dim.as_f64();
    // m_d is defined because BoundParams::new checked d >= 2.
    let md = (FRAC_2_PI * d / (d - 1.0)).sqrt();
    let radicand = (2.0 * (1.0 - md - p.t)).max(0.0);
    radicand.sqrt() * one_minus_exp_neg(0.5 * (d - 1.0) * p.t * p.t)
}

/// Number of uniform grid points on `[0, 1 - m_d]` used by default.
pub const DEFAULT_T_GRID: usize = 2000;

/// Largest `α` in the `t = α / sqrt(d - 1)` family added to the grid.
pub const ALPHA_MAX: u32 = 40;

/// Sorted admissible `t` values: `grid_size` uniform points on `[0, 1 - m_d]`
/// plus `α / sqrt(d - 1)` for `α = 1..=40` when admissible. Empty when no `t`
/// is admissible (`d < 4`).
pub fn lower_bound_t_grid(dim: Dimension, grid_size: usize) -> Result<Vec<f64>> {
    let max = 1.0 - m_d(dim)?;
    if max < 0.0 {
        return Ok(Vec::new());
    }
    let mut ts: Vec<f64> = match grid_size {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|i| {
                if i == n - 1 {
                    max
                } else {
                    max * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    };
    let root = (dim.as_f64() - 1.0).sqrt();
    ts.extend(
        (1..=ALPHA_MAX)
            .map(|alpha| alpha as f64 / root)
            .filter(|&t| t <= max),
    );
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    Ok(ts)
}

/// Maximum of the lower-bound functional over [`lower_bound_t_grid`], as
/// `(t_argmax, value)`. `None` when no `t` is admissible.
pub fn max_lower_bound(dim: Dimension, grid_size: usize) -> Result<Option<(f64, f64)>> {
    let mut best: Option<(f64, f64)> = None;
    for t in lower_bound_t_grid(dim, grid_size)? {
        let v = wasserstein_lower_bound(&BoundParams::new(dim, t)?);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    Ok(best)
}

/// `sqrt(2 - 2 sqrt(d) E|S_1|)`, the upper bound on `W_1(X(e1), T(e1))`.
pub fn wasserstein_upper_bound_e1(dim: Dimension) -> Result<f64> {
    let d = dim.as_f64();
    let mean = sphere_coordinate_abs_mean(dim)?;
    Ok((2.0 - 2.0 * d.sqrt() * mean).max(0.0).sqrt())
}

/// `C_pos d^(-1/5)`, the uniform bound on the coordinate Kolmogorov distance.
pub fn positive_bound(dim: Dimension) -> f64 {
    Constants::compute().c_pos * dim.as_f64().powf(-0.2)
}

/// `E[X]` for `X ~ χ_dof`: `sqrt(2) Γ((dof+1)/2) / Γ(dof/2)`.
pub fn chi_mean(dof: f64) -> Result<f64> {
    if !(dof >= 1.0) {
        return Err(Error::Domain(format!(
            "chi_mean requires dof >= 1, got {dof}"
        )));
    }
    Ok((0.5 * LN_2 + log_gamma_ratio(0.5 * dof, 0.5)?).exp())
}

/// `E[(X - sqrt(dof))²] = 2 dof - 2 sqrt(dof) E[X]` for `X ~ χ_dof`.
pub fn chi_centered_second_moment(dof: f64) -> Result<f64> {
    Ok(2.0 * dof - 2.0 * dof.sqrt() * chi_mean(dof)?)
}

/// The explicit constants of the marginal and global bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// `C_G + C_3`.
    pub c_pos: f64,
    /// `5 * 3^(4/5) / π^(7/5)`.
    pub c_g: f64,
    /// `sqrt(2) / π^(1/4)`.
    pub c3: f64,
    /// `sqrt(2 (1 - sqrt(2/π)))`.
    pub w1_asymptote: f64,
}

impl Constants {
    pub fn compute() -> Self {
        let c_g = 5.0 * 3f64.powf(0.8) / PI.powf(1.4);
        let c3 = std::f64::consts::SQRT_2 / PI.powf(0.25);
        Self {
            c_pos: c_g + c3,
            c_g,
            c3,
            w1_asymptote: (2.0 * (1.0 - FRAC_2_PI.sqrt())).sqrt(),
        }
    }
}
