//! Deterministic seed derivation for per-entity RNG streams.
//!
//! Every stochastic component (voice source, data source, channel walk,
//! traffic-mix draw) owns its own ChaCha8 stream derived from the master
//! seed, a purpose tag and an entity id. Streams are therefore independent
//! of scheduling decisions and of each other, which keeps paired runs
//! (same seed, different scheduler) on identical traffic and channels.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag for a derived stream.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    Voice,
    Data,
    Channel,
    Mix,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Voice => 0x564f494345, // "VOICE"
            Stream::Data => 0x44415441,
            Stream::Channel => 0x4348414e,
            Stream::Mix => 0x4d4958,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive the RNG for (`master_seed`, `stream`, `entity`).
pub fn derive(master_seed: u64, stream: Stream, entity: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(master_seed ^ stream.tag()).wrapping_add(entity));
    ChaCha8Rng::seed_from_u64(mixed)
}
