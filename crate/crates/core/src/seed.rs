use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with stream indices into an independent 64-bit seed (splitmix64 finaliser).
pub fn derive_seed(base: u64, streams: &[u64]) -> u64 {
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for &s in streams {
        h = mix(h.wrapping_add(mix(s.wrapping_add(0x632B_E59B_D9B4_E019))));
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
