//! Deterministic RNG derivation.
//!
//! All randomness in the toolkit flows from a single master seed through
//! keyed substreams, so that e.g. the corruption noise drawn for structure
//! `i` in epoch `e` does not depend on batch composition, thread count, or
//! anything another structure consumed. Substreams are ChaCha8 generators
//! seeded by mixing the master seed with a domain tag and stream keys.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche behaviour for key mixing.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Domain tags keep unrelated substreams disjoint even for equal keys.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    /// Parameter initialization.
    Init,
    /// Per-(epoch, structure) task decision and corruption draws.
    Corrupt { epoch: u64, structure: u64 },
    /// Per-epoch batch shuffling.
    Shuffle { epoch: u64 },
    /// Per-trajectory dataset generation (key = trajectory index, attempt).
    Trajectory { index: u64, attempt: u64 },
    /// Free-form test/check streams.
    Check { key: u64 },
}

impl Stream {
    fn key(self) -> (u64, u64, u64) {
        match self {
            Stream::Init => (1, 0, 0),
            Stream::Corrupt { epoch, structure } => (2, epoch, structure),
            Stream::Shuffle { epoch } => (3, epoch, 0),
            Stream::Trajectory { index, attempt } => (4, index, attempt),
            Stream::Check { key } => (5, key, 0),
        }
    }
}

/// Derives a deterministic substream generator from the master seed.
pub fn substream(master_seed: u64, stream: Stream) -> ChaCha8Rng {
    let (tag, k1, k2) = stream.key();
    let mut seed = [0u8; 32];
    let words = [
        mix(master_seed ^ mix(tag)),
        mix(master_seed.wrapping_add(mix(k1 ^ 0xa076_1d64_78bd_642f))),
        mix(k1 ^ mix(k2)),
        mix(k2.wrapping_add(mix(tag ^ master_seed))),
    ];
    for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
