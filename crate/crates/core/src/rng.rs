//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator seeded with [`SeedableRng::seed_from_u64`]
//! and switched to a numbered substream with `set_stream`. Estimators that must
//! see "the same random samples" (RANSAC, RANSAAC and their LO variants) all
//! draw their minimal samples from [`STREAM_HYPOTHESES`] of the same seed, while
//! local optimization draws from its own [`STREAM_LOCAL_OPT`], so running LO never
//! shifts the outer sample sequence.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Substream feeding synthetic scenario generation.
pub const STREAM_SCENARIO: u64 = 0;
/// Substream feeding minimal-sample draws of the outer consensus loop.
pub const STREAM_HYPOTHESES: u64 = 1;
/// Substream feeding inner samples of local optimization.
pub const STREAM_LOCAL_OPT: u64 = 2;
/// Substream feeding random ground-truth homographies.
pub const STREAM_GROUND_TRUTH: u64 = 3;

/// A deterministic generator bound to one `(seed, stream)` pair.
#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `0..n` (Lemire's multiply-and-reject).
    pub fn index_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let range = n as u64;
        let mut m = u128::from(self.next_u64()) * u128::from(range);
        if (m as u64) < range {
            let threshold = range.wrapping_neg() % range;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(range);
            }
        }
        (m >> 64) as usize
    }

    /// Uniform real in `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform real in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// The underlying generator, for use with `rand_distr` distributions.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Writes `k` distinct indices drawn uniformly from `0..n` into `out`
/// using Floyd's algorithm (exactly `k` draws from the stream).
pub(crate) fn floyd_sample(stream: &mut SampleStream, n: usize, k: usize, out: &mut Vec<usize>) {
    debug_assert!(k <= n);
    out.clear();
    for j in (n - k)..n {
        let t = stream.index_below(j + 1);
        if out.contains(&t) {
            out.push(j);
        } else {
            out.push(t);
        }
    }
}
