use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::StatsError;

pub type SeedRng = ChaCha8Rng;

/// Derives an independent child seed for `stream` from `root` (SplitMix64 finalizer).
pub fn child_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample of `size` values without replacement; deterministic per seed.
pub fn subsample<T: Copy>(values: &[T], size: usize, seed: u64) -> Result<Vec<T>, StatsError> {
    if size > values.len() {
        return Err(StatsError::SampleTooLarge {
            size,
            population: values.len(),
        });
    }
    let mut rng = seeded_rng(seed);
    Ok(index::sample(&mut rng, values.len(), size)
        .into_iter()
        .map(|i| values[i])
        .collect())
}
