//! Counter-based randomness.
//!
//! Every random draw in this crate is a pure function of a master seed and a
//! few index words (trial, step, edge or cell index). This makes samples
//! independent of iteration order and thread schedule, and lets Monte Carlo
//! carlo trials replay bit-for-bit.

/// Domain tags keep unrelated draws on disjoint streams.
pub mod domain {
    pub const EDGE_SAMPLE: u64 = 0x45444745; // edge states of a configuration
    pub const CELL_KERNEL: u64 = 0x4b45524e; // per-cell kernel randomness
    pub const PATH_WALK: u64 = 0x57414c4b; // random open-path generation
    pub const WALK_STEP: u64 = 0x48575250; // dominating random walk
    pub const GROWTH: u64 = 0x47524f57; // growth-process Bernoulli rows
    pub const FPT: u64 = 0x46505431; // first-passage edge times
    pub const GENERIC: u64 = 0x47454e52; // ad-hoc experiment draws
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a sequence of words into a single well-mixed 64-bit value.
#[inline]
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = GOLDEN ^ (words.len() as u64).wrapping_mul(0xff51_afd7_ed55_8ccd);
    for &w in words {
        h = splitmix(h.wrapping_add(GOLDEN) ^ w);
    }
    splitmix(h)
}

/// Uniform in [0, 1) from 53 high bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

#[inline]
pub fn uniform(words: &[u64]) -> f64 {
    unit_f64(hash_words(words))
}

/// Bernoulli(p) draw; `p = 1` is always true, `p = 0` never.
#[inline]
pub fn bernoulli(p: f64, words: &[u64]) -> bool {
    uniform(words) < p
}

/// Geometric on {1, 2, ...} with success parameter `1 - zeta`:
/// P(r) = zeta^(r-1) (1 - zeta).
pub fn geometric(zeta: f64, words: &[u64]) -> u64 {
    debug_assert!((0.0..1.0).contains(&zeta));
    if zeta == 0.0 {
        return 1;
    }
    let u = uniform(words);
    // Smallest r >= 1 with 1 - zeta^r > u.
    let r = ((1.0 - u).ln() / zeta.ln()).ceil();
    if r < 1.0 {
        1
    } else {
        r as u64
    }
}

/// Map a signed index to a word, keeping distinct values distinct.
#[inline]
pub fn signed_word(n: i64) -> u64 {
    (n as u64) ^ 0x8000_0000_0000_0000
}
