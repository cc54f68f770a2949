//! Empirical distributions and Monte Carlo estimators.
//!
//! Every estimator takes a [`StreamKey`]; sample `j` draws from the child key
//! `key.child(&[j])`, so results are the same however the work is split.
//! Parallel estimators reduce fixed-size blocks and merge them in block order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::hadamard::{fwht_unchecked, Dimension};
use crate::rng::{self, Layer, StreamKey};
use crate::rotor::{self, RotationSeed, UnitVector};
use crate::stats::RunningStats;
use crate::{Error, Result};

/// Samples per parallel work block.
const BLOCK: u64 = 1024;

/// Sorted sample array with `F(t) = #{x_i <= t} / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("NaN sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous evaluation in `O(log n)`.
    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.len() as f64
    }
}

/// One-sample Kolmogorov-Smirnov statistic `sup_t |F_n(t) - F(t)|` against a
/// continuous CDF, computed as
/// `max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)`.
pub fn ks_statistic_vs_cdf<F: Fn(f64) -> f64>(samples: &EmpiricalCdf, cdf: F) -> f64 {
    let n = samples.len() as f64;
    samples
        .sorted
        .iter()
        .enumerate()
        .fold(0.0f64, |acc, (i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            acc.max(above).max(below)
        })
}

/// `n_samples` independent draws of `[T(u)]_k`.
pub fn transform_coordinate_samples(
    u: &UnitVector,
    k: usize,
    n_samples: usize,
    key: StreamKey,
) -> Result<Vec<f64>> {
    rotor::check_coordinate(u.dim(), k)?;
    let mut scratch = Vec::with_capacity(u.dim().get());
    Ok((0..n_samples as u64)
        .map(|j| rotor::keyed_coordinate(u, key.child(&[j]), k, &mut scratch))
        .collect())
}

/// KS distance between the empirical law of `[T(u)]_k` and the exact law of
/// one coordinate of a uniform point on the sphere.
pub fn marginal_ks_experiment(
    u: &UnitVector,
    k: usize,
    n_samples: usize,
    key: StreamKey,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let dim = u.dim();
    // Fails early for d = 1.
    analytic::sphere_coordinate_cdf(0.0, dim)?;
    let ecdf = EmpiricalCdf::new(transform_coordinate_samples(u, k, n_samples, key)?)?;
    Ok(ks_statistic_vs_cdf(&ecdf, |t| {
        analytic::sphere_coordinate_cdf(t, dim).unwrap_or(f64::NAN)
    }))
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub n: u64,
}

impl From<RunningStats> for McEstimate {
    fn from(s: RunningStats) -> Self {
        Self {
            estimate: s.mean(),
            standard_error: s.standard_error(),
            n: s.count(),
        }
    }
}

fn blocked_stats<F>(n_samples: u64, per_sample: F) -> RunningStats
where
    F: Fn(u64, &mut Vec<f64>) -> f64 + Sync,
{
    let blocks = n_samples.div_ceil(BLOCK);
    let partials: Vec<RunningStats> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut scratch = Vec::new();
            let hi = ((b + 1) * BLOCK).min(n_samples);
            (b * BLOCK..hi)
                .map(|j| per_sample(j, &mut scratch))
                .collect()
        })
        .collect();
    partials.iter().fold(RunningStats::new(), |mut acc, p| {
        acc.merge(p);
        acc
    })
}

/// `E |X - sign(X)/sqrt(d)|_2` for `X` uniform on the sphere, which equals
/// `W_1(X(e1), T(e1))` exactly because `T(e1)` is a uniform hypercube vertex
/// mapped by the orthogonal `H/sqrt(d)`.
pub fn e1_wasserstein_mc(dim: Dimension, n_samples: usize, key: StreamKey) -> Result<McEstimate> {
    if n_samples < 2 {
        return Err(Error::Domain(
            "e1_wasserstein_mc needs at least 2 samples".into(),
        ));
    }
    let d = dim.get();
    let stats = blocked_stats(n_samples as u64, |j, g| {
        g.resize(d, 0.0);
        let mut rng = key.child(&[j]).rng(Layer::Gauss);
        let norm = loop {
            let norm = rotor::fill_gaussian(&mut rng, g);
            if norm > 0.0 {
                break norm;
            }
        };
        let l1: f64 = g.iter().map(|v| v.abs()).sum::<f64>() / norm;
        rotor::hypercube_distance_from_l1(l1, d)
    });
    Ok(stats.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossMoment {
    pub k: usize,
    pub r: usize,
    pub value: f64,
    pub standard_error: f64,
}

/// Streaming first and second moments of the coordinates of `T(u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: u64,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// `E[T_k^2]` estimates.
    pub second_moments: Vec<f64>,
    pub second_moment_se: Vec<f64>,
    pub cross_moments: Vec<CrossMoment>,
}

#[derive(Clone)]
struct MomentAccumulator {
    first: Vec<RunningStats>,
    second: Vec<RunningStats>,
    cross: Vec<RunningStats>,
}

impl MomentAccumulator {
    fn new(d: usize, pairs: usize) -> Self {
        Self {
            first: vec![RunningStats::new(); d],
            second: vec![RunningStats::new(); d],
            cross: vec![RunningStats::new(); pairs],
        }
    }

    fn merge(&mut self, other: &Self) {
        let zip = |a: &mut [RunningStats], b: &[RunningStats]| {
            a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y))
        };
        zip(&mut self.first, &other.first);
        zip(&mut self.second, &other.second);
        zip(&mut self.cross, &other.cross);
    }
}

pub fn transform_moment_summary(
    u: &UnitVector,
    n_samples: usize,
    key: StreamKey,
    cross_pairs: &[(usize, usize)],
) -> Result<MomentSummary> {
    if n_samples < 2 {
        return Err(Error::Domain(
            "moment summary needs at least 2 samples".into(),
        ));
    }
    let dim = u.dim();
    let d = dim.get();
    for &(k, r) in cross_pairs {
        rotor::check_coordinate(dim, k)?;
        rotor::check_coordinate(dim, r)?;
    }
    let n = n_samples as u64;
    let blocks = n.div_ceil(BLOCK);
    let partials: Vec<MomentAccumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = MomentAccumulator::new(d, cross_pairs.len());
            for j in b * BLOCK..((b + 1) * BLOCK).min(n) {
                let seed = RotationSeed::derive(dim, key.child(&[j]));
                let t = rotor::two_block_transform(u, &seed).expect("dimensions agree");
                let t = t.as_slice();
                for (i, &v) in t.iter().enumerate() {
                    acc.first[i].push(v);
                    acc.second[i].push(v * v);
                }
                for (p, &(k, r)) in cross_pairs.iter().enumerate() {
                    acc.cross[p].push(t[k] * t[r]);
                }
            }
            acc
        })
        .collect();
    let mut total = MomentAccumulator::new(d, cross_pairs.len());
    partials.iter().for_each(|p| total.merge(p));

    Ok(MomentSummary {
        n,
        mean: total.first.iter().map(RunningStats::mean).collect(),
        mean_se: total
            .first
            .iter()
            .map(RunningStats::standard_error)
            .collect(),
        second_moments: total.second.iter().map(RunningStats::mean).collect(),
        second_moment_se: total
            .second
            .iter()
            .map(RunningStats::standard_error)
            .collect(),
        cross_moments: cross_pairs
            .iter()
            .zip(&total.cross)
            .map(|(&(k, r), s)| CrossMoment {
                k,
                r,
                value: s.mean(),
                standard_error: s.standard_error(),
            })
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourthMoment {
    pub estimate: f64,
    pub standard_error: f64,
    /// `(3 - 2 sum_l u_l^4) / d`.
    pub exact: f64,
}

/// Monte Carlo and exact values of `E[sum_j b_j^4]` with `b = H D2 u / sqrt(d)`.
pub fn b_coefficient_fourth_moment(
    u: &UnitVector,
    n_samples: usize,
    key: StreamKey,
) -> Result<FourthMoment> {
    if n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let d = u.dim().get();
    let scale = 1.0 / (d as f64).sqrt();
    let stats = blocked_stats(n_samples as u64, |j, b| {
        b.clear();
        b.extend_from_slice(u.as_slice());
        rng::apply_random_signs(&mut key.child(&[j]).rng(Layer::D2), b);
        fwht_unchecked(b);
        b.iter().map(|v| (v * scale).powi(4)).sum()
    });
    let sum_u4: f64 = u.as_slice().iter().map(|v| v.powi(4)).sum();
    Ok(FourthMoment {
        estimate: stats.mean(),
        standard_error: stats.standard_error(),
        exact: (3.0 - 2.0 * sum_u4) / d as f64,
    })
}
