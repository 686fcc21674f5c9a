//! Seeded random streams.
//!
//! Every stochastic path draws from ChaCha8 (`rand_chacha`), keyed by a 64-bit
//! seed expanded with `seed_from_u64` and separated into independent streams
//! with `set_stream`. A run owns one stream per role, so adding a head or a
//! mixup draw never shifts the stream another component sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids. Head `h` uses `HEAD_BASE + 2h` for init and `+1` for dropout.
pub mod streams {
    pub const SHUFFLE: u64 = 0;
    pub const MIXUP: u64 = 1;
    pub const SUBSAMPLE: u64 = 2;
    pub const HEAD_BASE: u64 = 16;
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Weight-initialisation stream for head `head`.
pub fn head_init(seed: u64, head: u64) -> Rng {
    stream(seed, streams::HEAD_BASE + 2 * head)
}

/// Dropout-mask stream for head `head`.
pub fn head_dropout(seed: u64, head: u64) -> Rng {
    stream(seed, streams::HEAD_BASE + 2 * head + 1)
}
