//! Sylvester-ordered Walsh-Hadamard transforms.
//!
//! `H_1 = (1)`, `H_2n = [[H_n, H_n], [H_n, -H_n]]`, so that
//! `H[j][l] = (-1)^popcount(j & l)` with 0-based indices. All transforms here
//! are unnormalized: they compute `H x`, and `H H = d I`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest dimension accepted by [`naive_hadamard_multiply`].
pub const NAIVE_MAX_DIM: usize = 4096;

/// A power-of-two dimension `d = 2^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension {
    d: usize,
    log2d: u32,
}

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 || !d.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(d));
        }
        Ok(Self {
            d,
            log2d: d.trailing_zeros(),
        })
    }

    pub fn from_log2(m: u32) -> Result<Self> {
        1usize
            .checked_shl(m)
            .filter(|_| m < usize::BITS)
            .ok_or(Error::NotPowerOfTwo(0))
            .and_then(Self::new)
    }

    #[inline]
    pub fn get(self) -> usize {
        self.d
    }

    #[inline]
    pub fn log2(self) -> u32 {
        self.log2d
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self.d as f64
    }

    pub(crate) fn check_len(self, len: usize) -> Result<()> {
        if len != self.d {
            return Err(Error::LengthMismatch {
                expected: self.d,
                actual: len,
            });
        }
        Ok(())
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Self::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(dim: Dimension) -> usize {
        dim.d
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.d)
    }
}

/// The diagonal of a random sign matrix. Entries are stored as `±1.0` so the
/// diagonal can be applied with a plain multiply.
#[derive(Clone, Debug, PartialEq)]
pub struct SignVector {
    signs: Vec<f64>,
}

impl SignVector {
    /// Builds a sign vector from `±1` integers. Any other value is rejected.
    pub fn new(signs: &[i8]) -> Result<Self> {
        let signs = signs
            .iter()
            .map(|&s| match s {
                1 => Ok(1.0),
                -1 => Ok(-1.0),
                other => Err(Error::Domain(format!("sign entry {other} is not ±1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { signs })
    }

    pub fn all_positive(dim: Dimension) -> Self {
        Self {
            signs: vec![1.0; dim.get()],
        }
    }

    pub fn all_negative(dim: Dimension) -> Self {
        Self {
            signs: vec![-1.0; dim.get()],
        }
    }

    /// Wraps a buffer already known to hold only `±1.0`.
    pub(crate) fn from_raw(signs: Vec<f64>) -> Self {
        debug_assert!(signs.iter().all(|&s| s == 1.0 || s == -1.0));
        Self { signs }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.signs
    }

    /// The sign at `i` as `+1` or `-1`.
    pub fn get(&self, i: usize) -> i8 {
        if self.signs[i] > 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn to_i8(&self) -> Vec<i8> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

/// Entry `H[row][col]` of the Sylvester-ordered Hadamard matrix.
#[inline]
pub fn hadamard_entry(row: usize, col: usize) -> f64 {
    if (row & col).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Computes `H x` in place with iterative radix-2 butterflies.
pub fn fwht_in_place(x: &mut [f64], dim: Dimension) -> Result<()> {
    dim.check_len(x.len())?;
    fwht_unchecked(x);
    Ok(())
}

/// Out-of-place convenience wrapper around [`fwht_in_place`].
pub fn fwht(x: &[f64], dim: Dimension) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    fwht_in_place(&mut out, dim)?;
    Ok(out)
}

/// Butterfly kernel. `x.len()` must be a power of two.
pub(crate) fn fwht_unchecked(x: &mut [f64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    if n < 4 {
        if n == 2 {
            let (a, b) = (x[0], x[1]);
            x[0] = a + b;
            x[1] = a - b;
        }
        return;
    }

    // Stages h = 1 and h = 2 fused into one radix-4 pass.
    for q in x.chunks_exact_mut(4) {
        let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
        let (s0, d0) = (a + b, a - b);
        let (s1, d1) = (c + d, c - d);
        q[0] = s0 + s1;
        q[1] = d0 + d1;
        q[2] = s0 - s1;
        q[3] = d0 - d1;
    }

    let mut h = 4;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, t) = (*a + *b, *a - *b);
                *a = s;
                *b = t;
            }
        }
        h *= 2;
    }
}

/// Reference `O(d^2)` product `H x` from the explicit entry formula.
pub fn naive_hadamard_multiply(x: &[f64], dim: Dimension) -> Result<Vec<f64>> {
    if dim.get() > NAIVE_MAX_DIM {
        return Err(Error::OracleTooLarge {
            d: dim.get(),
            max: NAIVE_MAX_DIM,
        });
    }
    dim.check_len(x.len())?;
    Ok((0..dim.get())
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(l, &v)| hadamard_entry(j, l) * v)
                .sum()
        })
        .collect())
}

/// Returns `D x` for the diagonal `D = diag(s)`.
pub fn apply_sign_diagonal(x: &[f64], s: &SignVector) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    apply_sign_diagonal_in_place(&mut out, s)?;
    Ok(out)
}

pub fn apply_sign_diagonal_in_place(x: &mut [f64], s: &SignVector) -> Result<()> {
    if x.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            actual: x.len(),
        });
    }
    for (v, &sign) in x.iter_mut().zip(&s.signs) {
        *v *= sign;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    #[test]
    fn dimension_rejects_non_powers() {
        for bad in [0, 3, 6, 12, 1000] {
            assert!(matches!(Dimension::new(bad), Err(Error::NotPowerOfTwo(_))));
        }
        let d = dim(1024);
        assert_eq!(d.log2(), 10);
        assert_eq!(dim(1).log2(), 0);
        assert_eq!(Dimension::from_log2(5).unwrap().get(), 32);
    }

    #[test]
    fn fwht_small_cases() {
        assert_eq!(fwht(&[1.0, 0.0, 0.0, 0.0], dim(4)).unwrap(), vec![1.0; 4]);
        let (a, b) = (2.5, -0.75);
        assert_eq!(fwht(&[a, b], dim(2)).unwrap(), vec![a + b, a - b]);
        assert_eq!(fwht(&[3.0], dim(1)).unwrap(), vec![3.0]);
    }

    #[test]
    fn naive_small_cases() {
        assert_eq!(
            naive_hadamard_multiply(&[1.0, 0.0, 0.0, 0.0], dim(4)).unwrap(),
            vec![1.0; 4]
        );
        assert_eq!(
            naive_hadamard_multiply(&[0.0, 1.0, 0.0, 0.0], dim(4)).unwrap(),
            vec![1.0, -1.0, 1.0, -1.0]
        );
    }

    #[test]
    fn fwht_matches_naive_at_8_and_16() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in [8, 16] {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = fwht(&x, dim(d)).unwrap();
            let slow = naive_hadamard_multiply(&x, dim(d)).unwrap();
            let scale = slow.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn naive_rows_orthogonal_in_integers() {
        for d in [2usize, 4, 8, 16] {
            let h: Vec<Vec<i64>> = (0..d)
                .map(|k| (0..d).map(|j| hadamard_entry(k, j) as i64).collect())
                .collect();
            for k in 0..d {
                for r in 0..d {
                    let dot: i64 = (0..d).map(|j| h[k][j] * h[r][j]).sum();
                    assert_eq!(dot, if k == r { d as i64 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn entry_formula_matches_sylvester_recursion() {
        // Build H_16 by the block recursion and compare entrywise.
        let mut h = vec![vec![1.0f64]];
        while h.len() < 16 {
            let n = h.len();
            let mut next = vec![vec![0.0; 2 * n]; 2 * n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = h[i][j];
                    next[i][j + n] = h[i][j];
                    next[i + n][j] = h[i][j];
                    next[i + n][j + n] = -h[i][j];
                }
            }
            h = next;
        }
        for (i, row) in h.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, hadamard_entry(i, j));
            }
        }
    }

    #[test]
    fn naive_guard() {
        let d = dim(8192);
        assert!(matches!(
            naive_hadamard_multiply(&vec![0.0; 8192], d),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut x = vec![0.0; 5];
        assert!(matches!(
            fwht_in_place(&mut x, dim(4)),
            Err(Error::LengthMismatch {
                expected: 4,
                actual: 5
            })
        ));
        let s = SignVector::all_positive(dim(4));
        assert!(apply_sign_diagonal(&[1.0, 2.0], &s).is_err());
    }

    #[test]
    fn sign_diagonal_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let plus = SignVector::all_positive(dim(4));
        let minus = SignVector::all_negative(dim(4));
        let alt = SignVector::new(&[1, -1, 1, -1]).unwrap();
        assert_eq!(apply_sign_diagonal(&x, &plus).unwrap(), x.to_vec());
        assert_eq!(
            apply_sign_diagonal(&x, &minus).unwrap(),
            vec![-1.0, -2.0, -3.0, -4.0]
        );
        assert_eq!(
            apply_sign_diagonal(&x, &alt).unwrap(),
            vec![1.0, -2.0, 3.0, -4.0]
        );
        let twice = apply_sign_diagonal(&apply_sign_diagonal(&x, &alt).unwrap(), &alt).unwrap();
        assert_eq!(twice, x.to_vec());
        assert!(SignVector::new(&[1, 0, -1]).is_err());
        assert_eq!(alt.to_i8(), vec![1, -1, 1, -1]);
    }
}
