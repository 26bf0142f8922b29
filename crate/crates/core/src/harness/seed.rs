//! Hierarchical seed derivation.
//!
//! Every random stream in a run is keyed by a path of indices below one
//! master seed, so results do not depend on scheduling order.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 finalizer.
#[inline]
fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `path` below `master`.
///
/// The state starts at `avalanche(master + φ)` and absorbs each index as
/// `state = avalanche(state + φ ^ avalanche(index + φ·(depth + 1)))`, where
/// `φ` is the 64-bit golden-ratio constant and all arithmetic wraps. The
/// depth term separates `[a]` from `[a, 0]`.
pub fn seed_split(master: u64, path: &[u64]) -> u64 {
    let mut state = avalanche(master.wrapping_add(GOLDEN));
    for (depth, &index) in path.iter().enumerate() {
        let salt = GOLDEN.wrapping_mul(depth as u64 + 1);
        state = avalanche(state.wrapping_add(GOLDEN) ^ avalanche(index.wrapping_add(salt)));
    }
    state
}
