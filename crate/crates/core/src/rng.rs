//! Reproducible random streams.
//!
//! Every stream is a ChaCha20 keystream: the 256-bit key is expanded from a
//! 64-bit seed by `SeedableRng::seed_from_u64` (PCG32 expansion) and the
//! 64-bit ChaCha stream id selects an independent sequence under that key.
//! Sampling direction `k` always reads stream `k`, so a cloud is bitwise
//! identical no matter how the directions are scheduled across threads.
//!
//! Derived seeds (the evaluation cloud, synthetic data) go through
//! [`derive_seed`], which mixes a label into the master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Stream = ChaCha20Rng;

/// Stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes `label` into `seed` (FNV-1a over the label bytes, then a SplitMix64
/// finalizer).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn standard_normal(rng: &mut Stream) -> f64 {
    StandardNormal.sample(rng)
}

/// A `p`-vector of independent standard normals, redrawn if every entry is
/// exactly zero.
pub fn draw_direction(rng: &mut Stream, p: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..p).map(|_| standard_normal(rng)).collect();
        if d.iter().any(|&v| v != 0.0) {
            return d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = draw_direction(&mut stream(7, 3), 4);
        let b = draw_direction(&mut stream(7, 3), 4);
        let c = draw_direction(&mut stream(7, 4), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pinned_first_draw() {
        // Freezes the generator contract; a change here breaks reproducibility
        // of every recorded run.
        let d = draw_direction(&mut stream(42, 0), 3);
        let bits: Vec<u64> = d.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, [4586599339267580678, 13821389916875028419, 13828268650287796908]);
        assert_eq!(derive_seed(1, "eval"), 14358423152728815392);
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_ne!(derive_seed(1, "eval"), derive_seed(1, "synthetic"));
        assert_ne!(derive_seed(1, "eval"), derive_seed(2, "eval"));
        assert_eq!(derive_seed(1, "eval"), derive_seed(1, "eval"));
    }

    #[test]
    fn sample_mean_is_near_zero() {
        let mut rng = stream(2024, 0);
        let n = 10_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let d = draw_direction(&mut rng, 2);
            sum[0] += d[0];
            sum[1] += d[1];
        }
        for s in sum {
            assert!((s / n as f64).abs() < 0.05);
        }
    }
}
