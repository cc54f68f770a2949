//! Two-block structured Hadamard rotations and the numerical machinery for
//! checking how closely they mimic a uniform random rotation.
//!
//! The central object is `T(u) = (1/d) H D1 H D2 u` where `H` is the
//! Sylvester-ordered Walsh-Hadamard matrix and `D1`, `D2` are independent
//! random sign diagonals. Its one-coordinate marginals approach those of a
//! uniformly rotated vector (Kolmogorov distance of order `d^(-1/5)`), while
//! the joint law stays a constant Wasserstein distance away for `u = e1`.
//!
//! Module map:
//! - [`hadamard`]: fast and naive Walsh-Hadamard transforms, sign diagonals.
//! - [`rng`]: counter-keyed random substreams.
//! - [`rotor`]: the random transforms, spherical and hypercube samplers.
//! - [`analytic`]: special functions, exact spherical marginals, bound functionals.
//! - [`metrics`]: empirical CDFs, KS statistics, Monte Carlo estimators.
//! - [`lemma_suite`]: numerical verifiers for each supporting inequality.
//! - [`experiment`]: the experiment runners and their CSV/JSON reports.
//! - [`bench`]: FWHT timing.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bench;
mod error;
pub mod experiment;
pub mod hadamard;
pub mod lemma_suite;
pub mod metrics;
pub mod rng;
pub mod rotor;
pub mod stats;

pub use error::{Error, Result};
pub use hadamard::{Dimension, SignVector};
pub use rotor::{HypercubeVertex, RotationSeed, UnitVector};
