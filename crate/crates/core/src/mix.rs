//! Deterministic 64-bit mixing primitives used to derive table contents,
//! probe sequences and sub-seeds. Fixed constants keep every output
//! bit-identical across platforms and releases.

/// SplitMix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// SplitMix64 stream.
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub(crate) fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix64(self.state)
    }

    pub(crate) fn next_u128(&mut self) -> u128 {
        ((self.next_u64() as u128) << 64) | self.next_u64() as u128
    }
}

/// Maps a uniform 64-bit word onto `[0, n)` by fixed-point multiplication,
/// i.e. the high 64 bits of `word * n`. Unbiased to within `2^-64` and free
/// of modulo bias for any `n`.
#[inline]
pub(crate) fn reduce(word: u64, n: u32) -> u32 {
    (((word as u128) * (n as u128)) >> 64) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_stays_in_range() {
        for n in [1u32, 2, 3, 16, 17, 1000] {
            for w in [0u64, 1, u64::MAX / 2, u64::MAX - 1, u64::MAX] {
                assert!(reduce(w, n) < n);
            }
        }
    }

    #[test]
    fn reduce_is_monotone_in_word() {
        assert_eq!(reduce(0, 16), 0);
        assert_eq!(reduce(u64::MAX, 16), 15);
    }

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
