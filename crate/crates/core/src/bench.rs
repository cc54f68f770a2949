//! Wall-clock benchmark of the fast transform against the dense product.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::experiment::Check;
use crate::hadamard::{self, Dimension};
use crate::rng::{Layer, StreamKey};
use crate::Result;

/// Dimensions used for the log-log scaling fit.
pub const FIT_RANGE: (usize, usize) = (1 << 10, 1 << 20);
pub const EXPONENT_RANGE: (f64, f64) = (0.9, 1.4);
pub const SPEEDUP_DIM: usize = 4096;
pub const MIN_SPEEDUP: f64 = 10.0;
/// Seed of the benchmark input vectors.
pub const INPUT_SEED: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub d: usize,
    pub reps: usize,
    pub median_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub scaling_exponent: Option<f64>,
    pub naive_median_ns: f64,
    pub speedup_at_4096: f64,
    pub checks: Vec<Check>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,reps,median_ns\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.d, r.reps, r.median_ns));
        }
        out
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median nanoseconds per call of `f` over `reps` timed batches. Small inputs
/// are batched so each timing covers at least about `2^16` element updates.
fn time_per_call(d: usize, reps: usize, mut f: impl FnMut()) -> f64 {
    let inner = (1usize << 16).div_ceil(d).max(1);
    f();
    let samples = (0..reps)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..inner {
                f();
            }
            start.elapsed().as_nanos() as f64 / inner as f64
        })
        .collect();
    median(samples)
}

fn random_input(dim: Dimension) -> Vec<f64> {
    let mut rng = StreamKey::new(INPUT_SEED, dim.get() as u64).rng(Layer::Gauss);
    (0..dim.get())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect()
}

/// Median FWHT time per dimension. Each call restores the input first so
/// values stay bounded; the copy is `O(d)` and included in the timing.
pub fn time_fwht(dim: Dimension, reps: usize) -> f64 {
    let src = random_input(dim);
    let mut buf = src.clone();
    time_per_call(dim.get(), reps, || {
        buf.copy_from_slice(&src);
        hadamard::fwht_unchecked(&mut buf);
        std::hint::black_box(&buf);
    })
}

pub fn time_naive(dim: Dimension, reps: usize) -> Result<f64> {
    let src = random_input(dim);
    let mut result = Ok(());
    let t = time_per_call(
        dim.get() * dim.get(),
        reps,
        || match hadamard::naive_hadamard_multiply(&src, dim) {
            Ok(v) => {
                std::hint::black_box(v);
            }
            Err(e) => result = Err(e),
        },
    );
    result.map(|_| t)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Times the FWHT at each dimension, fits the scaling exponent over dims in
/// [`FIT_RANGE`] (checked when at least three are present), and compares
/// against the dense product at `d = 4096`.
pub fn bench_fwht(dims: &[Dimension], reps: usize) -> Result<BenchReport> {
    let reps = reps.max(1);
    let rows: Vec<BenchRow> = dims
        .iter()
        .map(|&dim| BenchRow {
            d: dim.get(),
            reps,
            median_ns: time_fwht(dim, reps),
        })
        .collect();

    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.d >= FIT_RANGE.0 && r.d <= FIT_RANGE.1)
        .map(|r| (r.d as f64, r.median_ns))
        .collect();
    let scaling_exponent = log_log_slope(&fit);
    let mut checks = Vec::new();
    if fit.len() >= 3 {
        if let Some(e) = scaling_exponent {
            checks.push(Check::range(
                "scaling_exponent",
                e,
                EXPONENT_RANGE.0,
                EXPONENT_RANGE.1,
            ));
        }
    }

    let dim = Dimension::new(SPEEDUP_DIM)?;
    let naive = time_naive(dim, 5)?;
    let fast = time_fwht(dim, reps.max(11));
    let speedup = naive / fast;
    checks.push(Check::range(
        "speedup_at_4096",
        speedup,
        MIN_SPEEDUP,
        f64::INFINITY,
    ));
    Ok(BenchReport {
        rows,
        scaling_exponent,
        naive_median_ns: naive,
        speedup_at_4096: speedup,
        checks,
    })
}
