//! Counter-keyed random substreams.
//!
//! Every random draw in the crate comes from `substream(master_seed,
//! stream_index, layer)`: a ChaCha8 generator keyed directly by the triple.
//! Distinct triples give unrelated keystreams, so results do not depend on
//! which worker evaluates which stream or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Which random object a substream feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u64)]
pub enum Layer {
    /// Diagonal of the outer sign matrix `D1`.
    D1 = 1,
    /// Diagonal of the inner sign matrix `D2`.
    D2 = 2,
    /// Gaussian draws (sphere samples, random inputs).
    Gauss = 3,
    /// Fair sign draws that are not part of a rotation (hypercube samples).
    Signs = 4,
}

const KEY_DOMAIN: u64 = 0x6861_6461_726f_7401; // "hadarot\x01"

/// A `(master_seed, stream_index)` pair naming a family of substreams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(self, layer: Layer) -> StreamRng {
        substream(self.master_seed, self.stream_index, layer)
    }

    /// Child key with `stream_index = stream_id([self.stream_index, parts..])`.
    pub fn child(self, parts: &[u64]) -> Self {
        let mut h = mix64(self.stream_index ^ KEY_DOMAIN);
        for &p in parts {
            h = mix64(h ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        }
        Self::new(self.master_seed, h)
    }
}

pub fn substream(master_seed: u64, stream_index: u64, layer: Layer) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream_index.to_le_bytes());
    key[16..24].copy_from_slice(&(layer as u64).to_le_bytes());
    key[24..].copy_from_slice(&KEY_DOMAIN.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Folds a tuple of integers into a single stream index.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(KEY_DOMAIN, |h, &p| {
        mix64(h ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    })
}

// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Overwrites `out` with fair `±1.0` signs, 64 per generator word.
/// Bit `i % 64` of word `i / 64` set means `-1`.
pub fn fill_signs<R: RngCore + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for chunk in out.chunks_mut(64) {
        let mut bits = rng.next_u64();
        for v in chunk {
            *v = if bits & 1 == 1 { -1.0 } else { 1.0 };
            bits >>= 1;
        }
    }
}

/// Multiplies `x` in place by fresh fair signs; identical to
/// `fill_signs` followed by an elementwise product.
pub fn apply_random_signs<R: RngCore + ?Sized>(rng: &mut R, x: &mut [f64]) {
    for chunk in x.chunks_mut(64) {
        let mut bits = rng.next_u64();
        for v in chunk {
            if bits & 1 == 1 {
                *v = -*v;
            }
            bits >>= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_reproducible() {
        let mut r = substream(7, 3, Layer::D1);
        let b: Vec<u64> = (0..8).map(|_| r.random()).collect();
        let mut r2 = substream(7, 3, Layer::D1);
        let c: Vec<u64> = (0..8).map(|_| r2.random()).collect();
        assert_eq!(b, c);
    }

    #[test]
    fn layers_and_indices_differ() {
        let first = |m, s, l| substream(m, s, l).next_u64();
        let base = first(7, 3, Layer::D1);
        assert_ne!(base, first(7, 3, Layer::D2));
        assert_ne!(base, first(7, 4, Layer::D1));
        assert_ne!(base, first(8, 3, Layer::D1));
        assert_ne!(first(7, 3, Layer::Gauss), first(7, 3, Layer::Signs));
    }

    #[test]
    fn stream_ids_are_order_sensitive() {
        assert_ne!(stream_id(&[1, 2]), stream_id(&[2, 1]));
        assert_ne!(stream_id(&[1]), stream_id(&[1, 0]));
        assert_eq!(stream_id(&[5, 9]), stream_id(&[5, 9]));
        let k = StreamKey::new(1, 2);
        assert_ne!(k.child(&[0]), k.child(&[1]));
        assert_eq!(k.child(&[3]), k.child(&[3]));
    }

    #[test]
    fn random_signs_match_filled_signs() {
        let mut signs = vec![0.0; 130];
        fill_signs(&mut substream(1, 1, Layer::D2), &mut signs);
        assert!(signs.iter().all(|&s| s == 1.0 || s == -1.0));
        let mut x: Vec<f64> = (0..130).map(|i| i as f64 + 0.5).collect();
        apply_random_signs(&mut substream(1, 1, Layer::D2), &mut x);
        for (i, (&v, &s)) in x.iter().zip(&signs).enumerate() {
            assert_eq!(v, s * (i as f64 + 0.5));
        }
    }

    #[test]
    fn signs_are_roughly_balanced() {
        let mut signs = vec![0.0; 100_000];
        fill_signs(&mut substream(2, 0, Layer::Signs), &mut signs);
        let mean = signs.iter().sum::<f64>() / signs.len() as f64;
        // SE of the mean is 1/sqrt(n) ~ 0.0032.
        assert!(mean.abs() < 0.015, "mean {mean}");
    }
}
