//! Counter-based random streams addressed by `(seed, tag, index)`.
//!
//! Every consumer of randomness derives its own ChaCha stream, so trials can
//! run in any order (or in parallel) and still produce the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a random stream is used for. Distinct purposes never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Channel,
    Noise,
    Symbols,
    Erasure,
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Channel => 1,
            Purpose::Noise => 2,
            Purpose::Symbols => 3,
            Purpose::Erasure => 4,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a purpose and a list of coordinates (system, SNR point, ...) into a tag.
pub fn tag(purpose: Purpose, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(purpose.code()), |acc, &c| splitmix64(acc ^ c))
}

/// Returns the stream for `(seed, tag, index)`.
pub fn substream(seed: u64, tag: u64, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
