//! Seeded random numbers shared by every module.
//!
//! All randomness goes through ChaCha8 seeded with a `u64`, so runs are
//! reproducible across platforms. Uniform reals are drawn on `[0, 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TtRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TtRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw on `[0, 1)`.
pub fn uniform(rng: &mut TtRng) -> f64 {
    rng.gen::<f64>()
}

/// Uniform multi-index for the given mode sizes.
pub fn random_index(rng: &mut TtRng, dims: &[usize], out: &mut [usize]) {
    for (slot, &n) in out.iter_mut().zip(dims) {
        *slot = rng.gen_range(0..n);
    }
}
