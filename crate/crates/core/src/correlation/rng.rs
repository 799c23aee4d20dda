use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64-style mixing of a run seed and a frame counter into an
/// independent 64-bit stream seed.
pub fn mix64(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for one frame; depends only on `(seed, frame_index)`.
pub fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed, frame_index))
}
