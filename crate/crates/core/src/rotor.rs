//! The random transforms and the reference spherical law.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::hadamard::{self, fwht_unchecked, hadamard_entry, Dimension, SignVector};
use crate::rng::{self, Layer, StreamKey};
use crate::{Error, Result};

/// Deviation from unit norm tolerated before a vector is renormalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A point on the unit sphere `S^(d-1)` with `d` a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
    dim: Dimension,
}

impl UnitVector {
    /// Accepts any finite nonzero vector of power-of-two length. Vectors whose
    /// norm is off by more than [`NORM_TOLERANCE`] are rescaled.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        let dim = Dimension::new(coords.len())?;
        let norm = l2_norm(&coords);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::DegenerateVector);
        }
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            coords.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self { coords, dim })
    }

    /// The standard basis vector `e_{i+1}` (0-based `i`).
    pub fn basis(dim: Dimension, i: usize) -> Result<Self> {
        if i >= dim.get() {
            return Err(Error::Domain(format!(
                "basis index {i} out of range for d = {dim}"
            )));
        }
        let mut coords = vec![0.0; dim.get()];
        coords[i] = 1.0;
        Ok(Self { coords, dim })
    }

    /// `(1/sqrt(d)) * (1, ..., 1)`.
    pub fn flat(dim: Dimension) -> Self {
        Self {
            coords: vec![1.0 / dim.as_f64().sqrt(); dim.get()],
            dim,
        }
    }

    #[inline]
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.coords)
    }
}

/// One draw of the sign diagonals `(D1, D2)`, together with the stream key it
/// was derived from when it came from [`RotationSeed::derive`].
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSeed {
    pub d1: SignVector,
    pub d2: SignVector,
    pub provenance: Option<StreamKey>,
}

impl RotationSeed {
    /// Draws `D1` and `D2` from the disjoint substreams `(key, D1)` and
    /// `(key, D2)`. Calling this again with the same key gives the same signs.
    pub fn derive(dim: Dimension, key: StreamKey) -> Self {
        let mut d1 = vec![0.0; dim.get()];
        let mut d2 = vec![0.0; dim.get()];
        rng::fill_signs(&mut key.rng(Layer::D1), &mut d1);
        rng::fill_signs(&mut key.rng(Layer::D2), &mut d2);
        Self {
            d1: SignVector::from_raw(d1),
            d2: SignVector::from_raw(d2),
            provenance: Some(key),
        }
    }

    pub fn from_signs(d1: SignVector, d2: SignVector) -> Result<Self> {
        if d1.len() != d2.len() {
            return Err(Error::LengthMismatch {
                expected: d1.len(),
                actual: d2.len(),
            });
        }
        Ok(Self {
            d1,
            d2,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.d1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d1.is_empty()
    }
}

/// A vertex of the scaled hypercube `{±1/sqrt(d)}^d`. Any `d >= 1` is allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct HypercubeVertex {
    pub signs: SignVector,
}

impl HypercubeVertex {
    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.dim() as f64).sqrt()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let s = self.scale();
        self.signs.as_slice().iter().map(|&v| v * s).collect()
    }
}

/// `T(u) = (1/d) H D1 H D2 u`.
pub fn two_block_transform(u: &UnitVector, seed: &RotationSeed) -> Result<UnitVector> {
    let dim = u.dim();
    dim.check_len(seed.len())?;
    let mut buf = u.coords.clone();
    hadamard::apply_sign_diagonal_in_place(&mut buf, &seed.d2)?;
    fwht_unchecked(&mut buf);
    hadamard::apply_sign_diagonal_in_place(&mut buf, &seed.d1)?;
    fwht_unchecked(&mut buf);
    let inv_d = 1.0 / dim.as_f64();
    buf.iter_mut().for_each(|v| *v *= inv_d);
    UnitVector::new(buf)
}

/// `(1/sqrt(d)) H D u`.
pub fn one_block_transform(u: &UnitVector, s: &SignVector) -> Result<UnitVector> {
    let mut buf = hadamard::apply_sign_diagonal(u.as_slice(), s)?;
    fwht_unchecked(&mut buf);
    let scale = 1.0 / u.dim().as_f64().sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    UnitVector::new(buf)
}

/// The coefficients `b = (1/sqrt(d)) H D2 u`. Conditionally on `D2`,
/// `sqrt(d) [T(u)]_k = sum_j H[k][j] D1_j b_j` and `sum_j b_j^2 = 1`.
pub fn conditional_coefficients(u: &UnitVector, d2: &SignVector) -> Result<Vec<f64>> {
    let mut b = hadamard::apply_sign_diagonal(u.as_slice(), d2)?;
    fwht_unchecked(&mut b);
    let scale = 1.0 / u.dim().as_f64().sqrt();
    b.iter_mut().for_each(|v| *v *= scale);
    Ok(b)
}

/// Coordinate `k` of `T(u)` without forming the whole output vector.
pub fn transform_coordinate(u: &UnitVector, seed: &RotationSeed, k: usize) -> Result<f64> {
    let dim = u.dim();
    check_coordinate(dim, k)?;
    dim.check_len(seed.len())?;
    let mut buf = hadamard::apply_sign_diagonal(u.as_slice(), &seed.d2)?;
    fwht_unchecked(&mut buf);
    let acc: f64 = buf
        .iter()
        .zip(seed.d1.as_slice())
        .enumerate()
        .map(|(j, (&v, &s))| hadamard_entry(k, j) * s * v)
        .sum();
    Ok(acc / dim.as_f64())
}

/// [`transform_coordinate`] for `RotationSeed::derive(dim, key)`, drawing the
/// signs straight from the substreams into a caller-owned scratch buffer.
pub(crate) fn keyed_coordinate(
    u: &UnitVector,
    key: StreamKey,
    k: usize,
    scratch: &mut Vec<f64>,
) -> f64 {
    let d = u.dim().get();
    scratch.clear();
    scratch.extend_from_slice(u.as_slice());
    rng::apply_random_signs(&mut key.rng(Layer::D2), scratch);
    fwht_unchecked(scratch);

    let mut d1 = key.rng(Layer::D1);
    let mut acc = 0.0;
    for (w, chunk) in scratch.chunks(64).enumerate() {
        let mut bits = rand::RngCore::next_u64(&mut d1);
        for (i, &v) in chunk.iter().enumerate() {
            let j = w * 64 + i;
            let flip = (bits & 1) as u32 ^ ((k & j).count_ones() & 1);
            acc += if flip == 1 { -v } else { v };
            bits >>= 1;
        }
    }
    acc / d as f64
}

pub(crate) fn check_coordinate(dim: Dimension, k: usize) -> Result<()> {
    if k >= dim.get() {
        return Err(Error::Domain(format!(
            "coordinate {k} out of range for d = {dim}"
        )));
    }
    Ok(())
}

/// Uniform point on `S^(d-1)` as `G / |G|` with `G` standard Gaussian.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(dim: Dimension, rng: &mut R) -> UnitVector {
    let mut coords = vec![0.0; dim.get()];
    loop {
        let norm = fill_gaussian(rng, &mut coords);
        if norm > 0.0 && norm.is_finite() {
            coords.iter_mut().for_each(|v| *v /= norm);
            return UnitVector { coords, dim };
        }
    }
}

/// Fills `out` with i.i.d. standard Gaussians and returns their Euclidean norm.
pub(crate) fn fill_gaussian<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) -> f64 {
    let mut sq = 0.0;
    for v in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        sq += g * g;
        *v = g;
    }
    sq.sqrt()
}

/// Uniform vertex of `{±1/sqrt(d)}^d`.
pub fn sample_hypercube<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<HypercubeVertex> {
    if d == 0 {
        return Err(Error::Domain("hypercube dimension must be >= 1".into()));
    }
    let mut signs = vec![0.0; d];
    rng::fill_signs(rng, &mut signs);
    Ok(HypercubeVertex {
        signs: SignVector::from_raw(signs),
    })
}

/// The vertex `sign(x)/sqrt(d)`, with `sign(0) = +1`. It maximizes `<x, y>`
/// over all vertices and hence minimizes the Euclidean distance to `x`.
pub fn nearest_hypercube_vertex(x: &[f64]) -> Result<HypercubeVertex> {
    if x.is_empty() {
        return Err(Error::Domain("hypercube dimension must be >= 1".into()));
    }
    let signs = x
        .iter()
        .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    Ok(HypercubeVertex {
        signs: SignVector::from_raw(signs),
    })
}

/// Distance from a unit vector to the scaled hypercube,
/// `sqrt(2 - 2 |x|_1 / sqrt(d))`.
pub fn hypercube_distance(x: &UnitVector) -> f64 {
    let l1: f64 = x.as_slice().iter().map(|v| v.abs()).sum();
    hypercube_distance_from_l1(l1, x.dim().get())
}

/// Closed form of the hypercube distance given `|x|_1` for a unit `x`.
#[inline]
pub fn hypercube_distance_from_l1(l1: f64, d: usize) -> f64 {
    (2.0 - 2.0 * l1 / (d as f64).sqrt()).max(0.0).sqrt()
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::naive_hadamard_multiply;
    use crate::rng::substream;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn unit_vector_normalizes_and_rejects() {
        let u = UnitVector::new(vec![3.0, 4.0]).unwrap();
        assert_close(u.as_slice(), &[0.6, 0.8], 1e-15);
        assert!(matches!(
            UnitVector::new(vec![0.0; 4]),
            Err(Error::DegenerateVector)
        ));
        assert!(UnitVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(matches!(
            UnitVector::new(vec![1.0; 3]),
            Err(Error::NotPowerOfTwo(3))
        ));
        // Within tolerance: left untouched.
        let nearly = vec![1.0 + 1e-12, 0.0];
        assert_eq!(
            UnitVector::new(nearly.clone()).unwrap().as_slice(),
            &nearly[..]
        );
    }

    #[test]
    fn trivial_signs_give_identity() {
        let u = UnitVector::new(vec![0.1, -0.7, 0.3, 0.2, 0.5, -0.1, 0.0, 0.4]).unwrap();
        let seed = RotationSeed::from_signs(
            SignVector::all_positive(u.dim()),
            SignVector::all_positive(u.dim()),
        )
        .unwrap();
        let out = two_block_transform(&u, &seed).unwrap();
        assert_close(out.as_slice(), u.as_slice(), 1e-15);
    }

    #[test]
    fn hand_computed_two_block_example() {
        // d = 4, D2 = I, D1 = diag(+,-,+,-), u = e1:
        // H D2 e1 = (1,1,1,1), D1 -> (1,-1,1,-1), H -> (0,4,0,0), /4 -> e2.
        let d = dim(4);
        let u = UnitVector::basis(d, 0).unwrap();
        let d1 = SignVector::new(&[1, -1, 1, -1]).unwrap();
        let seed = RotationSeed::from_signs(d1.clone(), SignVector::all_positive(d)).unwrap();
        let out = two_block_transform(&u, &seed).unwrap();
        // Oracle: naive matrix arithmetic.
        let inner = naive_hadamard_multiply(u.as_slice(), d).unwrap();
        let signed = hadamard::apply_sign_diagonal(&inner, &d1).unwrap();
        let expect: Vec<f64> = naive_hadamard_multiply(&signed, d)
            .unwrap()
            .iter()
            .map(|v| v / 4.0)
            .collect();
        assert_close(&expect, &[0.0, 1.0, 0.0, 0.0], 0.0);
        assert_close(out.as_slice(), &expect, 1e-15);
    }

    #[test]
    fn e1_lands_on_hypercube_after_unmixing() {
        let d = dim(64);
        let u = UnitVector::basis(d, 0).unwrap();
        for s in 0..20 {
            let seed = RotationSeed::derive(d, StreamKey::new(11, s));
            let w = two_block_transform(&u, &seed).unwrap();
            let y = hadamard::fwht(w.as_slice(), d).unwrap();
            let inv = 1.0 / 8.0;
            for v in y {
                assert!(((v / 8.0).abs() - inv).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_block_examples() {
        let d = dim(8);
        let e1 = UnitVector::basis(d, 0).unwrap();
        let c = 1.0 / 8f64.sqrt();
        let plus = one_block_transform(&e1, &SignVector::all_positive(d)).unwrap();
        assert_close(plus.as_slice(), &[c; 8], 1e-15);
        let mut signs = vec![1i8; 8];
        signs[0] = -1;
        let minus = one_block_transform(&e1, &SignVector::new(&signs).unwrap()).unwrap();
        assert_close(minus.as_slice(), &[-c; 8], 1e-15);

        // H 1 = d e1, so the flat vector maps back to e1.
        let d4 = dim(4);
        let flat = UnitVector::flat(d4);
        let out = one_block_transform(&flat, &SignVector::all_positive(d4)).unwrap();
        let oracle: Vec<f64> = naive_hadamard_multiply(flat.as_slice(), d4)
            .unwrap()
            .iter()
            .map(|v| v / 2.0)
            .collect();
        assert_close(out.as_slice(), &oracle, 1e-15);
        assert_close(out.as_slice(), &[1.0, 0.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn derived_seed_is_reproducible() {
        let d = dim(128);
        let a = RotationSeed::derive(d, StreamKey::new(5, 9));
        let b = RotationSeed::derive(d, StreamKey::new(5, 9));
        assert_eq!(a, b);
        assert_ne!(a.d1, a.d2);
        assert_ne!(a, RotationSeed::derive(d, StreamKey::new(5, 10)));
    }

    #[test]
    fn coordinate_paths_agree() {
        let d = dim(32);
        let u = sample_uniform_sphere(d, &mut substream(3, 0, Layer::Gauss));
        let mut scratch = Vec::new();
        for s in 0..10 {
            let key = StreamKey::new(3, s);
            let seed = RotationSeed::derive(d, key);
            let full = two_block_transform(&u, &seed).unwrap();
            for k in [0, 1, 7, 31] {
                let one = transform_coordinate(&u, &seed, k).unwrap();
                let keyed = keyed_coordinate(&u, key, k, &mut scratch);
                assert!((one - full.as_slice()[k]).abs() < 1e-14);
                assert!((keyed - one).abs() < 1e-14);
            }
        }
        assert!(
            transform_coordinate(&u, &RotationSeed::derive(d, StreamKey::new(0, 0)), 32).is_err()
        );
    }

    #[test]
    fn sphere_samples_are_unit() {
        let mut rng = substream(1, 2, Layer::Gauss);
        for d in [1, 2, 16, 1024] {
            let x = sample_uniform_sphere(dim(d), &mut rng);
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn d2_sphere_half_plane() {
        let mut rng = substream(2, 0, Layer::Gauss);
        let n = 100_000;
        let neg = (0..n)
            .filter(|_| sample_uniform_sphere(dim(2), &mut rng).as_slice()[0] <= 0.0)
            .count();
        let p = neg as f64 / n as f64;
        assert!((p - 0.5).abs() < 0.01, "p = {p}");
    }

    #[test]
    fn d16_sphere_second_moment() {
        let mut rng = substream(3, 0, Layer::Gauss);
        let n = 100_000;
        let sq: Vec<f64> = (0..n)
            .map(|_| sample_uniform_sphere(dim(16), &mut rng).as_slice()[0].powi(2))
            .collect();
        let mean = sq.iter().sum::<f64>() / n as f64;
        let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0 / 16.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn hypercube_sampler() {
        let mut rng = substream(4, 0, Layer::Signs);
        let n = 10_000;
        let plus = (0..n)
            .filter(|_| sample_hypercube(1, &mut rng).unwrap().to_vec()[0] == 1.0)
            .count();
        assert!((plus as f64 / n as f64 - 0.5).abs() < 0.01);

        let mut counts = [0usize; 8];
        for _ in 0..80_000 {
            let v = sample_hypercube(3, &mut rng).unwrap();
            assert!((l2_norm(&v.to_vec()) - 1.0).abs() < 1e-15);
            let idx = (0..3).fold(0, |acc, i| acc * 2 + usize::from(v.signs.get(i) < 0));
            counts[idx] += 1;
        }
        for c in counts {
            assert!((c as f64 / 80_000.0 - 0.125).abs() < 0.01, "{counts:?}");
        }
        assert!(sample_hypercube(0, &mut rng).is_err());
    }

    #[test]
    fn nearest_vertex_examples() {
        let v = nearest_hypercube_vertex(&[0.9, -0.1, 0.3, -0.2]).unwrap();
        assert_eq!(v.signs.to_i8(), vec![1, -1, 1, -1]);
        assert_close(&v.to_vec(), &[0.5, -0.5, 0.5, -0.5], 0.0);
        let e1 = nearest_hypercube_vertex(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e1.signs.to_i8(), vec![1, 1, 1, 1]);
        let neg_zero = nearest_hypercube_vertex(&[-0.0]).unwrap();
        assert_eq!(neg_zero.signs.to_i8(), vec![1]);
    }

    #[test]
    fn nearest_vertex_beats_every_vertex() {
        let mut rng = substream(6, 0, Layer::Gauss);
        for d in 1..=10usize {
            for _ in 0..5 {
                let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let best = nearest_hypercube_vertex(&x).unwrap().to_vec();
                let best_ip: f64 = x.iter().zip(&best).map(|(a, b)| a * b).sum();
                let scale = 1.0 / (d as f64).sqrt();
                for mask in 0u32..(1 << d) {
                    let ip: f64 = (0..d)
                        .map(|i| if mask >> i & 1 == 1 { -x[i] } else { x[i] } * scale)
                        .sum();
                    assert!(ip <= best_ip + 1e-12);
                }
            }
        }
    }

    #[test]
    fn hypercube_distance_examples() {
        let v = UnitVector::new(vec![0.5, -0.5, 0.5, 0.5]).unwrap();
        assert!(hypercube_distance(&v).abs() < 1e-7);
        let e1 = UnitVector::basis(dim(4), 0).unwrap();
        let closed = hypercube_distance(&e1);
        let explicit = l2_norm(&[0.5, -0.5, -0.5, -0.5]);
        assert!((closed - 1.0).abs() < 1e-15);
        assert!((closed - explicit).abs() < 1e-15);
        let e1_big = UnitVector::basis(dim(1024), 3).unwrap();
        assert!((hypercube_distance(&e1_big) - (2.0 - 2.0 / 32.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_explicit_vertex_distance() {
        let mut rng = substream(7, 0, Layer::Gauss);
        for d in [2, 8, 64, 512] {
            for _ in 0..50 {
                let x = sample_uniform_sphere(dim(d), &mut rng);
                let y = nearest_hypercube_vertex(x.as_slice()).unwrap().to_vec();
                let diff: Vec<f64> = x.as_slice().iter().zip(&y).map(|(a, b)| a - b).collect();
                assert!((l2_norm(&diff) - hypercube_distance(&x)).abs() < 1e-9);
            }
        }
    }
}
