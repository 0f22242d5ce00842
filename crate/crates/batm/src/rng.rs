//! Seeded random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from the single
//! user-facing seed plus a purpose tag, so adding a consumer never shifts the
//! draws seen by another, and runs are reproducible at any thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag for an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    CorpusSplit,
    EmbeddingInit,
    ParamInit,
    BatchShuffle { epoch: u64 },
    GradCheck { case: u64 },
    Synthetic,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::CorpusSplit => 1,
            Stream::EmbeddingInit => 2,
            Stream::ParamInit => 3,
            Stream::BatchShuffle { epoch } => 0x1000u64.wrapping_add(epoch),
            Stream::GradCheck { case } => 0x2000_0000u64.wrapping_add(case),
            Stream::Synthetic => 4,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed).wrapping_add(splitmix64(stream.id())))
}

/// Standard normal draw via Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
