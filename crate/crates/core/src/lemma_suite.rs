//! Numerical verifiers for the inequalities behind the marginal and global
//! results.
//!
//! Each verifier evaluates one inequality over deterministic grids and/or
//! seeded random instances and returns a [`VerifierReport`]. The slack of an
//! instance is `rhs - lhs` (plus any statistical allowance), so a negative
//! slack beyond the tolerance is a violation. Monte Carlo checks use additive
//! allowances: `k` standard errors, or `2/sqrt(n)` for KS statistics.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{self, Constants};
use crate::hadamard::{self, hadamard_entry, Dimension, SignVector};
use crate::metrics::{self, EmpiricalCdf};
use crate::rng::{Layer, StreamKey};
use crate::rotor::{self, RotationSeed, UnitVector};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub verifier: String,
    pub instances: u64,
    pub violations: u64,
    pub min_slack: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_hash: Option<String>,
}

/// Running tally of slacks for one verifier.
#[derive(Clone, Debug)]
struct Tally {
    name: &'static str,
    tolerance: f64,
    strict: bool,
    instances: u64,
    violations: u64,
    min_slack: f64,
    details: BTreeMap<String, f64>,
    grid_hash: Option<String>,
}

impl Tally {
    /// Violation when `slack < -tolerance`.
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            strict: false,
            instances: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            details: BTreeMap::new(),
            grid_hash: None,
        }
    }

    /// Violation when `slack <= 0`.
    fn strict(name: &'static str) -> Self {
        Self {
            strict: true,
            ..Self::new(name, 0.0)
        }
    }

    /// Records one instance and reports whether it is the new minimum.
    fn check(&mut self, slack: f64) -> bool {
        self.instances += 1;
        let violated = if self.strict {
            !(slack > 0.0)
        } else {
            !(slack >= -self.tolerance)
        };
        if violated {
            self.violations += 1;
        }
        if slack < self.min_slack || slack.is_nan() {
            self.min_slack = slack;
            return true;
        }
        false
    }

    fn detail(&mut self, key: impl Into<String>, value: f64) {
        self.details.insert(key.into(), value);
    }

    fn finish(self) -> VerifierReport {
        VerifierReport {
            verifier: self.name.to_string(),
            instances: self.instances,
            violations: self.violations,
            min_slack: self.min_slack,
            pass: self.violations == 0 && self.instances > 0,
            details: self.details,
            grid_hash: self.grid_hash,
        }
    }
}

fn grid_hash(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn l2_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `|prod a - prod b| <= γ^(d-1) sum |a_j - b_j|` for `|a_j|, |b_j| <= γ`.
pub fn verify_product_difference(
    trials: usize,
    max_d: usize,
    key: StreamKey,
    tolerance: f64,
) -> VerifierReport {
    let mut tally = Tally::new("product-difference", tolerance);
    let check = |a: &[f64], b: &[f64], gamma: f64, tally: &mut Tally| {
        let lhs = (a.iter().product::<f64>() - b.iter().product::<f64>()).abs();
        let rhs = gamma.powi(a.len() as i32 - 1)
            * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
        tally.check((rhs - lhs) / rhs.max(1.0));
    };
    let mut rng = key.rng(Layer::Gauss);
    for gamma in [0.5, 1.0, 2.0] {
        // a = b and the d = 1 base case.
        check(
            &[gamma, -gamma / 3.0],
            &[gamma, -gamma / 3.0],
            gamma,
            &mut tally,
        );
        let (a, b) = (
            rng.random_range(-gamma..=gamma),
            rng.random_range(-gamma..=gamma),
        );
        check(&[a], &[b], gamma, &mut tally);
        for _ in 0..trials {
            let d = rng.random_range(1..=max_d.max(1));
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(-gamma..=gamma)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.random_range(-gamma..=gamma)).collect();
            check(&a, &b, gamma, &mut tally);
        }
    }
    tally.finish()
}

/// `|cos x - exp(-x²/2)| <= x⁴/6` on a uniform grid over `[lo, hi]`.
pub fn verify_cos_exp(lo: f64, hi: f64, points: usize, tolerance: f64) -> VerifierReport {
    let mut tally = Tally::new("cos-exp", tolerance);
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64)
        .chain([0.0, 1.0, 10.0])
        .collect();
    let mut tightest_nonzero = (f64::INFINITY, f64::NAN);
    for &x in &grid {
        let lhs = (x.cos() - (-0.5 * x * x).exp()).abs();
        let rhs = x.powi(4) / 6.0;
        let slack = rhs - lhs;
        if tally.check(slack) {
            tally.detail("argmin_x", x);
        }
        if x != 0.0 && rhs > 0.0 && slack / rhs < tightest_nonzero.0 {
            tightest_nonzero = (slack / rhs, x);
        }
    }
    tally.detail("min_relative_slack_nonzero", tightest_nonzero.0);
    tally.detail("argmin_relative_x", tightest_nonzero.1);
    tally.grid_hash = Some(grid_hash(&grid));
    tally.finish()
}

/// `x -> |x|_1 / sqrt(d)` is 1-Lipschitz for the Euclidean norm.
pub fn verify_lipschitz_l1(
    trials: usize,
    dim: Dimension,
    key: StreamKey,
    tolerance: f64,
) -> VerifierReport {
    let mut tally = Tally::new("lipschitz-l1", tolerance);
    let d = dim.get();
    let h = |x: &[f64]| x.iter().map(|v| v.abs()).sum::<f64>() / (d as f64).sqrt();
    let check = |x: &[f64], y: &[f64], tally: &mut Tally| {
        tally.check(l2_dist(x, y) - (h(x) - h(y)).abs());
    };
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let neg: Vec<f64> = e1.iter().map(|v| -v).collect();
    check(&e1, &e1, &mut tally);
    check(&e1, &neg, &mut tally);
    let mut rng = key.rng(Layer::Gauss);
    for _ in 0..trials {
        let x = gaussian_vec(&mut rng, d);
        let y = gaussian_vec(&mut rng, d);
        check(&x, &y, &mut tally);
    }
    tally.detail("d", d as f64);
    tally.finish()
}

/// Distance to the scaled hypercube is 1-Lipschitz, checked on sphere pairs
/// with the closed form `sqrt(2 - 2 |x|_1 / sqrt(d))`.
pub fn verify_distance_to_set_lipschitz(
    trials: usize,
    dim: Dimension,
    key: StreamKey,
    tolerance: f64,
) -> VerifierReport {
    let mut tally = Tally::new("distance-to-set-lipschitz", tolerance);
    let mut rng = key.rng(Layer::Gauss);
    let check = |x: &UnitVector, y: &UnitVector, tally: &mut Tally| {
        let lhs = (rotor::hypercube_distance(x) - rotor::hypercube_distance(y)).abs();
        tally.check(l2_dist(x.as_slice(), y.as_slice()) - lhs);
    };
    for _ in 0..trials {
        let x = rotor::sample_uniform_sphere(dim, &mut rng);
        let y = rotor::sample_uniform_sphere(dim, &mut rng);
        check(&x, &x, &mut tally);
        check(&x, &y, &mut tally);
        // A vertex against a sphere point: f(vertex) = 0.
        let v = rotor::sample_hypercube(dim.get(), &mut rng).expect("d >= 1");
        let v = UnitVector::new(v.to_vec()).expect("vertex is a unit vector");
        check(&v, &y, &mut tally);
    }
    tally.detail("d", dim.as_f64());
    tally.finish()
}

/// `P(h(X) - E h(X) > t) <= exp(-(d-1) t² / 2)` for `h = |x|_1 / sqrt(d)`,
/// with the empirical tail allowed `3` binomial standard errors.
pub fn verify_spherical_concentration(
    dim: Dimension,
    t_grid: &[f64],
    n_samples: usize,
    key: StreamKey,
) -> Result<VerifierReport> {
    let d = dim.get();
    let df = dim.as_f64();
    let mean_h = df.sqrt() * analytic::sphere_coordinate_abs_mean(dim)?;
    const CHUNK: u64 = 4096;
    let n = n_samples as u64;
    let partial: Vec<Vec<u64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; t_grid.len()];
            let mut g = vec![0.0; d];
            for j in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = key.child(&[j]).rng(Layer::Gauss);
                let norm = rotor::fill_gaussian(&mut rng, &mut g);
                let h = g.iter().map(|v| v.abs()).sum::<f64>() / norm / df.sqrt();
                for (cnt, &t) in counts.iter_mut().zip(t_grid) {
                    if h - mean_h > t {
                        *cnt += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut tally = Tally::new("spherical-concentration", 0.0);
    for (i, &t) in t_grid.iter().enumerate() {
        let exceed: u64 = partial.iter().map(|c| c[i]).sum();
        let empirical = exceed as f64 / n as f64;
        let bound = (-0.5 * (df - 1.0) * t * t).exp();
        let p = bound.min(1.0);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        tally.check(bound + 3.0 * se - empirical);
        tally.detail(format!("tail_t{t}"), empirical);
        tally.detail(format!("bound_t{t}"), bound);
    }
    tally.detail("d", df);
    tally.detail("n", n as f64);
    tally.grid_hash = Some(grid_hash(t_grid));
    Ok(tally.finish())
}

/// Deterministic `sup_t |F_d(t) - Φ(t sqrt(d))|` over `z = t sqrt(d)` on a
/// uniform grid in `[-10, 10]`, as `(sup, argmax_t)`.
pub fn sphere_gauss_sup_difference(dim: Dimension, points: usize) -> Result<(f64, f64)> {
    let root = dim.as_f64().sqrt();
    let mut best = (0.0f64, 0.0f64);
    for i in 0..points {
        let z = -10.0 + 20.0 * i as f64 / (points - 1) as f64;
        let t = z / root;
        let diff = (analytic::sphere_coordinate_cdf(t, dim)? - analytic::normal_cdf(z)).abs();
        if diff > best.0 {
            best = (diff, t);
        }
    }
    Ok(best)
}

/// `K(S_1, N(0, 1/d)) <= C_3 d^(-1/4)`: checked deterministically on a grid
/// and by Monte Carlo with a `2/sqrt(n)` allowance.
pub fn verify_sphere_gauss_ks(
    dims: &[Dimension],
    n_samples: usize,
    key: StreamKey,
) -> Result<VerifierReport> {
    const POINTS: usize = 20_001;
    let mut tally = Tally::new("sphere-gauss-ks", 0.0);
    let c3 = Constants::compute().c3;
    for &dim in dims {
        let d = dim.as_f64();
        let bound = c3 * d.powf(-0.25);
        let (sup, at) = sphere_gauss_sup_difference(dim, POINTS)?;
        tally.check(bound - sup);
        tally.detail(format!("sup_diff_d{dim}"), sup);
        tally.detail(format!("argmax_t_d{dim}"), at);
        tally.detail(format!("bound_d{dim}"), bound);

        if n_samples > 0 {
            let stream = key.child(&[dim.get() as u64]);
            let xs: Vec<f64> = (0..n_samples as u64)
                .into_par_iter()
                .map(|j| {
                    let mut rng = stream.child(&[j]).rng(Layer::Gauss);
                    rotor::sample_uniform_sphere(dim, &mut rng).as_slice()[0]
                })
                .collect();
            let ks = metrics::ks_statistic_vs_cdf(&EmpiricalCdf::new(xs)?, |t| {
                analytic::gaussian_cdf(t, 1.0 / d)
            });
            tally.check(bound + 2.0 / (n_samples as f64).sqrt() - ks);
            tally.detail(format!("mc_ks_d{dim}"), ks);
        }
    }
    let grid: Vec<f64> = (0..POINTS)
        .map(|i| -10.0 + 20.0 * i as f64 / (POINTS - 1) as f64)
        .collect();
    tally.grid_hash = Some(grid_hash(&grid));
    Ok(tally.finish())
}

/// Gautschi's inequality `x^(1-s) < Γ(x+1)/Γ(x+s) < (x+1)^(1-s)` on a
/// log-spaced grid, and `0 < E[(χ_d - sqrt(d))²] <= 2` for `d = 2^0..=2^max_log2`.
/// Gautschi margins are taken in log space and must be strictly positive.
pub fn verify_gautschi_and_chi(x_points: usize, max_log2: u32) -> Result<VerifierReport> {
    let mut tally = Tally::strict("gautschi-chi");
    let xs: Vec<f64> = (0..x_points)
        .map(|i| 10f64.powf(-3.0 + 7.0 * i as f64 / (x_points.max(2) - 1) as f64))
        .collect();
    let mut gautschi_min = f64::INFINITY;
    for &x in &xs {
        for k in 1..=9 {
            let s = k as f64 / 10.0;
            let ln_ratio = analytic::log_gamma_ratio(x + s, 1.0 - s)?;
            let lower = ln_ratio - (1.0 - s) * x.ln();
            let upper = (1.0 - s) * x.ln_1p() - ln_ratio;
            tally.check(lower);
            tally.check(upper);
            gautschi_min = gautschi_min.min(lower).min(upper);
        }
    }
    let mut chi_min = f64::INFINITY;
    for m in 0..=max_log2 {
        let d = (1u64 << m) as f64;
        let v = analytic::chi_centered_second_moment(d)?;
        tally.check(v);
        tally.check(2.0 - v);
        chi_min = chi_min.min(v.min(2.0 - v));
        if m == 0 || m == max_log2 {
            tally.detail(format!("chi_centered_d{}", 1u64 << m), v);
        }
    }
    tally.detail("gautschi_min_log_margin", gautschi_min);
    tally.detail("chi_min_margin", chi_min);
    tally.grid_hash = Some(grid_hash(&xs));
    Ok(tally.finish())
}

/// `K([T(u)]_k, N(0, 1/d)) <= C_G d^(-1/5)` for `u` in
/// `{e1, 1/sqrt(d), random}`, `k = 0`, with a `2/sqrt(n)` allowance.
pub fn verify_gauss_bridge_ks(
    dims: &[Dimension],
    n_samples: usize,
    key: StreamKey,
) -> Result<VerifierReport> {
    let mut tally = Tally::new("gauss-bridge-ks", 0.0);
    let c_g = Constants::compute().c_g;
    for &dim in dims {
        let d = dim.as_f64();
        let bound = c_g * d.powf(-0.2) + 2.0 / (n_samples as f64).sqrt();
        let stream = key.child(&[dim.get() as u64]);
        for (idx, (label, u)) in canonical_inputs(dim, stream)?.into_iter().enumerate() {
            let xs = metrics::transform_coordinate_samples(
                &u,
                0,
                n_samples,
                stream.child(&[idx as u64 + 1]),
            )?;
            let ks = metrics::ks_statistic_vs_cdf(&EmpiricalCdf::new(xs)?, |t| {
                analytic::gaussian_cdf(t, 1.0 / d)
            });
            tally.check(bound - ks);
            tally.detail(format!("ks_d{dim}_{label}"), ks);
        }
        tally.detail(format!("bound_d{dim}"), c_g * d.powf(-0.2));
    }
    Ok(tally.finish())
}

/// `e1`, the flat vector and one random sphere point.
pub fn canonical_inputs(dim: Dimension, key: StreamKey) -> Result<Vec<(&'static str, UnitVector)>> {
    Ok(vec![
        ("e1", UnitVector::basis(dim, 0)?),
        ("flat", UnitVector::flat(dim)),
        (
            "random",
            rotor::sample_uniform_sphere(dim, &mut key.rng(Layer::Gauss)),
        ),
    ])
}

/// `E[T(u)] = 0` within 4 SE and `Cov(T(u)) = I/d` within 5 SE (diagonal
/// second moments and `n_pairs` random off-diagonal pairs) for each canonical input.
pub fn verify_moment_identities(
    dim: Dimension,
    n_samples: usize,
    n_pairs: usize,
    key: StreamKey,
) -> Result<VerifierReport> {
    let d = dim.get();
    let mut tally = Tally::new("moment-identities", 0.0);
    let mut rng = key.child(&[0]).rng(Layer::Signs);
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| {
            let idx = sample_indices(&mut rng, d, 2);
            (idx.index(0), idx.index(1))
        })
        .collect();
    for (i, (label, u)) in canonical_inputs(dim, key.child(&[1]))?
        .into_iter()
        .enumerate()
    {
        let s =
            metrics::transform_moment_summary(&u, n_samples, key.child(&[2, i as u64]), &pairs)?;
        let mut worst = f64::INFINITY;
        for k in 0..d {
            let a = 4.0 * s.mean_se[k] - s.mean[k].abs();
            let b = 5.0 * s.second_moment_se[k] - (s.second_moments[k] - 1.0 / d as f64).abs();
            tally.check(a);
            tally.check(b);
            worst = worst.min(a).min(b);
        }
        for c in &s.cross_moments {
            let slack = 5.0 * c.standard_error - c.value.abs();
            tally.check(slack);
            worst = worst.min(slack);
        }
        tally.detail(format!("min_slack_{label}"), worst);
    }
    tally.detail("d", d as f64);
    tally.detail("n", n_samples as f64);
    Ok(tally.finish())
}

/// `E[sum_j b_j^4] = (3 - 2 sum u^4)/d <= 3/d`: Monte Carlo within 5 SE of the
/// exact value, and below `3/d + 5 SE`. An absolute floor of `1e-12` covers
/// inputs where every draw is identical (SE = 0).
pub fn verify_coeff_fourth_moment(
    dim: Dimension,
    n_samples: usize,
    key: StreamKey,
) -> Result<VerifierReport> {
    const FLOOR: f64 = 1e-12;
    let mut tally = Tally::new("coeff-fourth-moment", 0.0);
    let bound = 3.0 / dim.as_f64();
    for (i, (label, u)) in canonical_inputs(dim, key.child(&[0]))?
        .into_iter()
        .enumerate()
    {
        let r = metrics::b_coefficient_fourth_moment(&u, n_samples, key.child(&[1, i as u64]))?;
        let allowance = (5.0 * r.standard_error).max(FLOOR);
        tally.check(allowance - (r.estimate - r.exact).abs());
        tally.check(bound + allowance - r.estimate);
        tally.check(bound - r.exact);
        tally.detail(format!("estimate_{label}"), r.estimate);
        tally.detail(format!("exact_{label}"), r.exact);
    }
    tally.detail("bound_3_over_d", bound);
    Ok(tally.finish())
}

/// `sqrt(d) [T(u)]_k = sum_j ξ_j b_j` with `ξ_j = H[k][j] D1_j`, and
/// `sum_j b_j² = 1`, to `1e-9`, for every `k` at each dimension.
pub fn verify_conditional_representation(
    dims: &[Dimension],
    trials: usize,
    key: StreamKey,
) -> VerifierReport {
    const TOL: f64 = 1e-9;
    let mut tally = Tally::new("conditional-representation", 0.0);
    for &dim in dims {
        let d = dim.get();
        let root = dim.as_f64().sqrt();
        for trial in 0..trials as u64 {
            let stream = key.child(&[d as u64, trial]);
            let u = rotor::sample_uniform_sphere(dim, &mut stream.rng(Layer::Gauss));
            let seed = RotationSeed::derive(dim, stream);
            let t = rotor::two_block_transform(&u, &seed).expect("dimensions agree");
            let b = rotor::conditional_coefficients(&u, &seed.d2).expect("dimensions agree");
            tally.check(TOL - (b.iter().map(|v| v * v).sum::<f64>() - 1.0).abs());
            for k in 0..d {
                let sum: f64 = (0..d)
                    .map(|j| hadamard_entry(k, j) * seed.d1.as_slice()[j] * b[j])
                    .sum();
                tally.check(TOL - (root * t.as_slice()[k] - sum).abs());
            }
        }
    }
    tally.finish()
}

/// `|X - sign(X)/sqrt(d)|_2` equals the closed form `sqrt(2 - 2|X|_1/sqrt(d))`
/// per sample to `1e-9`.
pub fn verify_hypercube_coupling(
    dims: &[Dimension],
    trials: usize,
    key: StreamKey,
) -> VerifierReport {
    const TOL: f64 = 1e-9;
    let mut tally = Tally::new("hypercube-coupling", 0.0);
    for &dim in dims {
        let mut rng = key.child(&[dim.get() as u64]).rng(Layer::Gauss);
        for _ in 0..trials {
            let x = rotor::sample_uniform_sphere(dim, &mut rng);
            let y = rotor::nearest_hypercube_vertex(x.as_slice())
                .expect("d >= 1")
                .to_vec();
            tally.check(TOL - (l2_dist(x.as_slice(), &y) - rotor::hypercube_distance(&x)).abs());
        }
    }
    tally.finish()
}

/// For `u = e1`, the sign pattern of `H T(e1)` is uniform on `{±1}^d`:
/// chi-square over all `2^d` cells, passing when the p-value exceeds `1e-4`.
pub fn verify_e1_sign_uniformity(
    dim: Dimension,
    n_samples: usize,
    key: StreamKey,
) -> Result<VerifierReport> {
    const P_MIN: f64 = 1e-4;
    let d = dim.get();
    if d > 16 {
        return Err(Error::Domain(format!(
            "sign uniformity uses 2^d cells; d = {d} too large"
        )));
    }
    let e1 = UnitVector::basis(dim, 0)?;
    let cells = 1usize << d;
    let mut counts = vec![0u64; cells];
    for j in 0..n_samples as u64 {
        let seed = RotationSeed::derive(dim, key.child(&[j]));
        let t = rotor::two_block_transform(&e1, &seed)?;
        let y = hadamard::fwht(t.as_slice(), dim)?;
        let cell = y
            .iter()
            .fold(0usize, |acc, &v| (acc << 1) | usize::from(v < 0.0));
        counts[cell] += 1;
    }
    let expected = n_samples as f64 / cells as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = (cells - 1) as f64;
    let p = analytic::regularized_gamma_q(0.5 * dof, 0.5 * chi2)?;
    let mut tally = Tally::new("e1-sign-uniformity", 0.0);
    tally.check(p - P_MIN);
    tally.detail("chi_square", chi2);
    tally.detail("p_value", p);
    Ok(tally.finish())
}

/// The one-block transform of `e1` takes exactly two (antipodal) values.
pub fn verify_one_block_degeneracy(
    dim: Dimension,
    n_seeds: usize,
    key: StreamKey,
) -> Result<VerifierReport> {
    let e1 = UnitVector::basis(dim, 0)?;
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut tally = Tally::new("one-block-degeneracy", 0.0);
    let mut antipodal_err = 0.0f64;
    let mut first: Option<Vec<f64>> = None;
    for j in 0..n_seeds as u64 {
        let mut signs = vec![0.0; dim.get()];
        crate::rng::fill_signs(&mut key.child(&[j]).rng(Layer::D2), &mut signs);
        let s = SignVector::from_raw(signs);
        let out = rotor::one_block_transform(&e1, &s)?;
        seen.insert(
            out.as_slice()
                .iter()
                .map(|v| (v * 1e9).round() as i64)
                .collect(),
        );
        match &first {
            None => first = Some(out.into_vec()),
            Some(f) => {
                let same = l2_dist(f, out.as_slice());
                let anti = f
                    .iter()
                    .zip(out.as_slice())
                    .map(|(a, b)| (a + b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                antipodal_err = antipodal_err.max(same.min(anti));
            }
        }
    }
    tally.check(if seen.len() == 2 { 0.0 } else { -1.0 });
    tally.check(1e-12 - antipodal_err);
    tally.detail("distinct_values", seen.len() as f64);
    Ok(tally.finish())
}

/// Sizes and seeds for [`run_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub master_seed: u64,
    /// Additive allowance for deterministic inequality checks.
    pub tolerance: f64,
    pub trials: usize,
    pub product_max_d: usize,
    pub cos_exp_points: usize,
    pub lipschitz_l1_dim: usize,
    pub distance_dim: usize,
    pub concentration_dim: usize,
    pub concentration_t: Vec<f64>,
    pub concentration_samples: usize,
    pub sphere_gauss_dims: Vec<usize>,
    pub sphere_gauss_samples: usize,
    pub gautschi_points: usize,
    pub chi_max_log2: u32,
    pub bridge_dims: Vec<usize>,
    pub bridge_samples: usize,
    pub moment_dim: usize,
    pub moment_samples: usize,
    pub moment_pairs: usize,
    pub fourth_dim: usize,
    pub fourth_samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            master_seed: 20_240_601,
            tolerance: 1e-12,
            trials: 10_000,
            product_max_d: 12,
            cos_exp_points: 1_000_000,
            lipschitz_l1_dim: 128,
            distance_dim: 64,
            concentration_dim: 1024,
            concentration_t: vec![0.01, 0.02, 0.05, 0.1, 0.15, 0.2],
            concentration_samples: 1_000_000,
            sphere_gauss_dims: vec![4, 16, 64, 256, 1024],
            sphere_gauss_samples: 20_000,
            gautschi_points: 400,
            chi_max_log2: 20,
            bridge_dims: vec![2, 16, 1024],
            bridge_samples: 100_000,
            moment_dim: 64,
            moment_samples: 200_000,
            moment_pairs: 10,
            fourth_dim: 32,
            fourth_samples: 100_000,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) || !self.tolerance.is_finite() {
            return Err(Error::Config(format!(
                "tolerance must be a finite non-negative number, got {}",
                self.tolerance
            )));
        }
        let counts = [
            ("trials", self.trials),
            ("product_max_d", self.product_max_d),
            ("cos_exp_points", self.cos_exp_points),
            ("concentration_samples", self.concentration_samples),
            ("gautschi_points", self.gautschi_points),
            ("bridge_samples", self.bridge_samples),
            ("fourth_samples", self.fourth_samples),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.moment_samples < 2 {
            return Err(Error::Config("moment_samples must be >= 2".into()));
        }
        if self.cos_exp_points < 2 || self.gautschi_points < 2 {
            return Err(Error::Config("grids need at least 2 points".into()));
        }
        let dims = [
            self.lipschitz_l1_dim,
            self.distance_dim,
            self.concentration_dim,
            self.moment_dim,
            self.fourth_dim,
        ];
        for d in dims
            .iter()
            .chain(&self.sphere_gauss_dims)
            .chain(&self.bridge_dims)
        {
            Dimension::new(*d).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.concentration_dim < 2 || self.sphere_gauss_dims.iter().any(|&d| d < 2) {
            return Err(Error::Config("spherical checks need d >= 2".into()));
        }
        if self.moment_dim < 2 && self.moment_pairs > 0 {
            return Err(Error::Config("cross moments need d >= 2".into()));
        }
        if self.concentration_t.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("concentration t values must be >= 0".into()));
        }
        Ok(())
    }
}

/// Names accepted by [`run_suite`]'s filter, in execution order.
pub const VERIFIERS: [&str; 14] = [
    "product-difference",
    "cos-exp",
    "lipschitz-l1",
    "distance-to-set-lipschitz",
    "spherical-concentration",
    "sphere-gauss-ks",
    "gautschi-chi",
    "gauss-bridge-ks",
    "moment-identities",
    "coeff-fourth-moment",
    "conditional-representation",
    "hypercube-coupling",
    "e1-sign-uniformity",
    "one-block-degeneracy",
];

fn dims(ds: &[usize]) -> Result<Vec<Dimension>> {
    ds.iter().map(|&d| Dimension::new(d)).collect()
}

/// Runs every verifier, or only `only` when given.
pub fn run_suite(config: &SuiteConfig, only: Option<&str>) -> Result<Vec<VerifierReport>> {
    config.validate()?;
    if let Some(name) = only {
        if !VERIFIERS.contains(&name) {
            return Err(Error::Config(format!(
                "unknown verifier '{name}'; expected one of {}",
                VERIFIERS.join(", ")
            )));
        }
    }
    let root = StreamKey::new(config.master_seed, 0x5E7F);
    let tol = config.tolerance;
    let mut out = Vec::new();
    for (idx, &name) in VERIFIERS.iter().enumerate() {
        if only.is_some_and(|o| o != name) {
            continue;
        }
        let key = root.child(&[idx as u64]);
        let report = match name {
            "product-difference" => {
                verify_product_difference(config.trials, config.product_max_d, key, tol)
            }
            "cos-exp" => verify_cos_exp(-20.0, 20.0, config.cos_exp_points, tol),
            "lipschitz-l1" => verify_lipschitz_l1(
                config.trials,
                Dimension::new(config.lipschitz_l1_dim)?,
                key,
                tol,
            ),
            "distance-to-set-lipschitz" => verify_distance_to_set_lipschitz(
                config.trials,
                Dimension::new(config.distance_dim)?,
                key,
                tol,
            ),
            "spherical-concentration" => verify_spherical_concentration(
                Dimension::new(config.concentration_dim)?,
                &config.concentration_t,
                config.concentration_samples,
                key,
            )?,
            "sphere-gauss-ks" => verify_sphere_gauss_ks(
                &dims(&config.sphere_gauss_dims)?,
                config.sphere_gauss_samples,
                key,
            )?,
            "gautschi-chi" => verify_gautschi_and_chi(config.gautschi_points, config.chi_max_log2)?,
            "gauss-bridge-ks" => {
                verify_gauss_bridge_ks(&dims(&config.bridge_dims)?, config.bridge_samples, key)?
            }
            "moment-identities" => verify_moment_identities(
                Dimension::new(config.moment_dim)?,
                config.moment_samples,
                config.moment_pairs,
                key,
            )?,
            "coeff-fourth-moment" => verify_coeff_fourth_moment(
                Dimension::new(config.fourth_dim)?,
                config.fourth_samples,
                key,
            )?,
            "conditional-representation" => {
                verify_conditional_representation(&dims(&[2, 4, 8, 16, 32, 64])?, 20, key)
            }
            "hypercube-coupling" => verify_hypercube_coupling(&dims(&[8, 64, 1024])?, 1000, key),
            "e1-sign-uniformity" => verify_e1_sign_uniformity(Dimension::new(8)?, 100_000, key)?,
            "one-block-degeneracy" => verify_one_block_degeneracy(Dimension::new(64)?, 1000, key)?,
            _ => unreachable!("filtered above"),
        };
        out.push(report);
    }
    Ok(out)
}
