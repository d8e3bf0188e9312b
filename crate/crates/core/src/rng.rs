//! Seeded, stream-separated random numbers.
//!
//! Every random quantity in the crate is derived from a `(seed, stream)` pair
//! through ChaCha8, so results are bit-identical across platforms. Parallel
//! replicas use distinct stream indices.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `0..bound`, sampled through `u64` so that 32- and
/// 64-bit targets agree.
pub fn below<R: Rng + ?Sized>(rng: &mut R, bound: usize) -> usize {
    debug_assert!(bound > 0);
    rng.gen_range(0..bound as u64) as usize
}

/// Uniform `f64` in `[0, 1)`.
pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Index drawn from a discrete law given by nonnegative `weights` (summing to
/// one up to rounding). Falls back to the last positive weight when rounding
/// leaves `u` past the cumulative total.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u = unit(rng);
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Standard normal via Box–Muller.
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - unit(rng);
    let u2 = unit(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}
