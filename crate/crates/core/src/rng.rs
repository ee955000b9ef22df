//! Seed contract for every random stream in the crate.
//!
//! A stream is ChaCha8 keyed by `ChaCha8Rng::seed_from_u64(seed)` with the
//! ChaCha stream id set to `stream`. Sweeps use the grid-point index as
//! the stream id. The photon Monte Carlo uses the phase index for fringe
//! samples and `WHICH_WAY_STREAM_BASE + k` for its k-th which-way
//! measurement. Both algorithms are fixed by `rand_chacha`, so outputs are
//! identical across platforms and independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const WHICH_WAY_STREAM_BASE: u64 = 1 << 32;

/// Environment variable that overrides the CLI's default seed.
pub const SEED_ENV_VAR: &str = "MZI_DUALITY_SEED";

pub const DEFAULT_SEED: u64 = 20_160_894;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
