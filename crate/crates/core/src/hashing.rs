//! Seeded random function families shared by every sketch in the crate.
//!
//! All sketches consume hash rounds `h_0, ..., h_{2t-1}` where each
//! `h_i(a)` yields a bin and a 64-bit fraction word. Rather than keeping
//! `2t` separate functions, one mixed tabulation hash is evaluated on the
//! packed pair `(round, element)`: the key is split into 8-bit characters,
//! each character indexes a lookup table of 128-bit rows, the rows are
//! XORed together, and a second pass over four derived characters mixes the
//! result further. One evaluation therefore costs a constant number of
//! table lookups and yields both the bin word and the fraction word.

use siphasher::sip128::{Hasher128, SipHasher24};
use std::hash::Hasher;

use crate::mix::{mix64, reduce, SplitMix64};

/// Largest supported sketch length. Rounds are packed into a 16-bit channel
/// and sketch construction uses rounds `0..2t`, so `2t` must fit in it.
pub const MAX_SKETCH_LEN: u32 = 1 << 15;

/// Largest supported per-row index for row-keyed hashing (MinHash rows).
pub const MAX_ROWS: u32 = 1 << 16;

/// A key from the hashed universe. String tokens are mapped into this type
/// by [`tokenize`]; numeric inputs can be used directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub u64);

/// One hash-round evaluation: a bin in `[t]` and a uniform 64-bit fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashOutput {
    pub bin: u32,
    pub fraction: u64,
}

/// A seeded family of round-keyed hash functions.
///
/// Implementations must be pure functions of `(seed, round, element)`:
/// the same seed gives bit-identical outputs across runs and platforms.
pub trait RoundHasher {
    /// The seed this family was built from.
    fn seed(&self) -> u64;

    /// Raw 128-bit evaluation on the packed `(round, element)` key,
    /// returned as `(bin_word, fraction_word)`.
    ///
    /// Panics if `round >= MAX_ROWS`.
    fn hash_words(&self, round: u32, elem: ElementId) -> (u64, u64);

    /// Evaluates round `round` of a `2t`-round family.
    ///
    /// For `round < t` the bin is the fixed-point reduction of the bin word
    /// onto `[t]`; for `round >= t` the bin is forced to `round - t` so that
    /// the last `t` rounds fill every bin deterministically.
    ///
    /// Panics if `round >= 2t` or `t` is out of range.
    fn hash_round(&self, round: u32, elem: ElementId, t: u32) -> HashOutput {
        assert!(
            (1..=MAX_SKETCH_LEN).contains(&t),
            "sketch length {t} out of range"
        );
        assert!(round < 2 * t, "round {round} out of range for t = {t}");
        let (bin_word, fraction) = self.hash_words(round, elem);
        let bin = if round < t {
            reduce(bin_word, t)
        } else {
            round - t
        };
        HashOutput { bin, fraction }
    }
}

/// Packs `(round, element)` into the 10-byte key hashed by all backends:
/// a 16-bit round followed by the 64-bit element, little endian.
#[inline]
fn pack_key(round: u32, elem: ElementId) -> [u8; 10] {
    debug_assert!(round < MAX_ROWS);
    let mut key = [0u8; 10];
    key[..2].copy_from_slice(&(round as u16).to_le_bytes());
    key[2..].copy_from_slice(&elem.0.to_le_bytes());
    key
}

/// Mixed tabulation hash over the packed `(round, element)` key.
///
/// The key's 10 input characters index tables of 128-bit rows plus 32 bits
/// of derived characters; the 4 derived characters index a second bank of
/// 128-bit rows. All tables are filled from a SplitMix64 stream seeded with
/// the constructor seed, in declaration order, so the whole function is a
/// deterministic expansion of the 64-bit seed.
pub struct SketchHasher {
    seed: u64,
    input_value: Vec<u128>,
    input_derive: Vec<u32>,
    derived_value: Vec<u128>,
}

impl SketchHasher {
    /// Input characters per key: a 16-bit round plus a 64-bit element,
    /// 8 bits each.
    pub const INPUT_CHARS: usize = 10;
    /// Derived characters mixed in by the second lookup pass.
    pub const DERIVED_CHARS: usize = 4;

    pub fn new(seed: u64) -> Self {
        let mut stream = SplitMix64::new(seed);
        let mut input_value = Vec::with_capacity(Self::INPUT_CHARS * 256);
        for _ in 0..Self::INPUT_CHARS * 256 {
            input_value.push(stream.next_u128());
        }
        let mut input_derive = Vec::with_capacity(Self::INPUT_CHARS * 256);
        for _ in 0..Self::INPUT_CHARS * 256 {
            input_derive.push(stream.next_u64() as u32);
        }
        let mut derived_value = Vec::with_capacity(Self::DERIVED_CHARS * 256);
        for _ in 0..Self::DERIVED_CHARS * 256 {
            derived_value.push(stream.next_u128());
        }
        SketchHasher {
            seed,
            input_value,
            input_derive,
            derived_value,
        }
    }

    #[inline]
    fn eval(&self, key: &[u8; 10]) -> u128 {
        let mut value = 0u128;
        let mut derived = 0u32;
        for (i, &ch) in key.iter().enumerate() {
            let idx = i * 256 + ch as usize;
            value ^= self.input_value[idx];
            derived ^= self.input_derive[idx];
        }
        for j in 0..Self::DERIVED_CHARS {
            let ch = ((derived >> (8 * j)) & 0xff) as usize;
            value ^= self.derived_value[j * 256 + ch];
        }
        value
    }
}

impl RoundHasher for SketchHasher {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn hash_words(&self, round: u32, elem: ElementId) -> (u64, u64) {
        assert!(round < MAX_ROWS, "round {round} exceeds the 16-bit channel");
        let v = self.eval(&pack_key(round, elem));
        ((v >> 64) as u64, v as u64)
    }
}

/// Alternative backend over SipHash-2-4, a strong keyed pseudorandom
/// function, behind the same interface. It exists for differential testing:
/// a bug in the tabulation tables shows up as a statistical disagreement
/// between the two backends on the same experiment.
pub struct SipRoundHasher {
    seed: u64,
    key0: u64,
    key1: u64,
}

impl SipRoundHasher {
    pub fn new(seed: u64) -> Self {
        SipRoundHasher {
            seed,
            key0: mix64(seed ^ 0x736b_6574_6368_6831),
            key1: mix64(seed ^ 0x736b_6574_6368_6832),
        }
    }
}

impl RoundHasher for SipRoundHasher {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn hash_words(&self, round: u32, elem: ElementId) -> (u64, u64) {
        assert!(round < MAX_ROWS, "round {round} exceeds the 16-bit channel");
        let mut h = SipHasher24::new_with_keys(self.key0, self.key1);
        h.write(&pack_key(round, elem));
        let d = h.finish128();
        (d.h1, d.h2)
    }
}

/// Keyed 64-bit digest of a byte string. Deterministic for a fixed seed,
/// identical across platforms.
pub fn digest64(bytes: &[u8], seed: u64) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15 ^ (bytes.len() as u64);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = mix64(h ^ u64::from_le_bytes(word));
    }
    mix64(h)
}

/// Maps an arbitrary token (for example a text shingle) into the hashed
/// universe. A total function: the empty string is a valid token.
pub fn tokenize(token: &[u8], seed: u64) -> ElementId {
    ElementId(digest64(token, seed))
}
