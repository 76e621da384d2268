//! The fast similarity sketch: construction, union, Jaccard estimation and
//! b-bit feature vectors.
//!
//! A sketch of a set `A` is a length-`t` vector whose entry `j` is the
//! minimum, over all rounds `i in [2t]` and elements `a in A` with
//! `bin_i(a) = j`, of the value contributed by round `i`. Values from round
//! `i` live in `[i, i+1)`, so later rounds can never displace earlier ones;
//! construction walks the rounds in order and stops as soon as every bin
//! holds a value. Rounds `t..2t` force bin `i - t`, which guarantees
//! termination within `2t` rounds for any nonempty input.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hashing::{ElementId, RoundHasher, MAX_SKETCH_LEN};
use crate::wire::{Reader, Writer};

/// One sketch entry: the round that produced it plus a 64-bit fraction.
///
/// The pair encodes a real value in `[round, round + 1)` losslessly; ordering
/// is lexicographic on `(round, fraction)` and equality is exact bitwise
/// equality. The sentinel `round == 2t` stands for "still empty" and orders
/// after every reachable value, keeping the ordering total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SketchValue {
    pub round: u32,
    pub fraction: u64,
}

impl SketchValue {
    fn sentinel(t: u32) -> Self {
        SketchValue {
            round: 2 * t,
            fraction: 0,
        }
    }

    fn is_sentinel(&self, t: u32) -> bool {
        self.round == 2 * t
    }
}

/// A filled similarity sketch of length `t`, tagged with the seed of the
/// hash family that built it. Sketches are immutable values; any number of
/// them can be built concurrently from one shared hasher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    t: u32,
    seed: u64,
    entries: Vec<SketchValue>,
}

const SKETCH_MAGIC: &[u8; 4] = b"FSK1";

impl Sketch {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[SketchValue] {
        &self.entries
    }

    /// Per-entry equality against another sketch of the same shape.
    pub fn matches(&self, other: &Sketch) -> Result<Vec<bool>> {
        check_compatible(self, other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a == b)
            .collect())
    }

    /// Serializes as `FSK1`, `t` (u32), `seed` (u64), then `t` records of
    /// `(round: u32, fraction: u64)`, all little endian.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = Writer::new(w);
        w.write_bytes(SKETCH_MAGIC)?;
        w.write_u32(self.t)?;
        w.write_u64(self.seed)?;
        for e in &self.entries {
            w.write_u32(e.round)?;
            w.write_u64(e.fraction)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Sketch> {
        let mut r = Reader::new(r);
        r.expect_magic(SKETCH_MAGIC)?;
        let t = r.read_u32()?;
        if t == 0 || t > MAX_SKETCH_LEN {
            return Err(r.bad(format!("sketch length {t} out of range")));
        }
        let seed = r.read_u64()?;
        let mut entries = Vec::with_capacity(t as usize);
        for _ in 0..t {
            let round = r.read_u32()?;
            if round > 2 * t {
                return Err(r.bad(format!("round {round} out of range for t = {t}")));
            }
            let fraction = r.read_u64()?;
            entries.push(SketchValue { round, fraction });
        }
        Ok(Sketch { t, seed, entries })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(16 + 12 * self.t as usize);
        self.write_to(&mut buf).expect("vec write cannot fail");
        buf
    }

    /// Reassembles a sketch from already validated parts (deserialization).
    pub(crate) fn from_raw(t: u32, seed: u64, entries: Vec<SketchValue>) -> Sketch {
        debug_assert_eq!(entries.len(), t as usize);
        Sketch { t, seed, entries }
    }
}

fn check_compatible(a: &Sketch, b: &Sketch) -> Result<()> {
    if a.t != b.t {
        return Err(Error::IncompatibleSketches(format!(
            "length {} vs {}",
            a.t, b.t
        )));
    }
    if a.seed != b.seed {
        return Err(Error::IncompatibleSketches(format!(
            "seed {:#x} vs {:#x}",
            a.seed, b.seed
        )));
    }
    Ok(())
}

/// Construction counters, exposed so that the expected-work claim
/// (`O(t log t + |A|)` hash evaluations) is testable without a clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillStats {
    /// Number of `(round, element)` hash evaluations performed.
    pub hash_evals: u64,
    /// Number of full rounds executed before every bin was filled.
    pub rounds: u32,
}

/// Builds the sketch of `set`.
///
/// Equivalent to evaluating the defining entrywise minimum over all `2t`
/// rounds; the early exit after a completed round cannot change any entry
/// because later rounds carry strictly larger values. Duplicate elements in
/// `set` do not change the result, only the evaluation count.
pub fn fill_sketch<H: RoundHasher + ?Sized>(
    set: &[ElementId],
    t: u32,
    hasher: &H,
) -> Result<Sketch> {
    fill_sketch_with_stats(set, t, hasher).map(|(s, _)| s)
}

/// [`fill_sketch`] plus construction counters.
pub fn fill_sketch_with_stats<H: RoundHasher + ?Sized>(
    set: &[ElementId],
    t: u32,
    hasher: &H,
) -> Result<(Sketch, FillStats)> {
    assert!(
        (1..=MAX_SKETCH_LEN).contains(&t),
        "sketch length {t} out of range"
    );
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut entries = vec![SketchValue::sentinel(t); t as usize];
    let mut filled = 0u32;
    let mut stats = FillStats {
        hash_evals: 0,
        rounds: 0,
    };
    for round in 0..2 * t {
        for &a in set {
            let out = hasher.hash_round(round, a, t);
            stats.hash_evals += 1;
            let slot = &mut entries[out.bin as usize];
            if slot.is_sentinel(t) {
                filled += 1;
            }
            let v = SketchValue {
                round,
                fraction: out.fraction,
            };
            if v < *slot {
                *slot = v;
            }
        }
        stats.rounds = round + 1;
        if filled == t {
            break;
        }
    }
    debug_assert_eq!(filled, t, "rounds t..2t must fill every bin");
    Ok((
        Sketch {
            t,
            seed: hasher.seed(),
            entries,
        },
        stats,
    ))
}

/// Entrywise minimum of two sketches built with the same `t` and seed.
/// Bit-identical to sketching the union of the underlying sets.
pub fn union_sketch(a: &Sketch, b: &Sketch) -> Result<Sketch> {
    check_compatible(a, b)?;
    let entries = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| *x.min(y))
        .collect();
    Ok(Sketch {
        t: a.t,
        seed: a.seed,
        entries,
    })
}

/// Fraction of equal entries, the sketch estimate of Jaccard similarity.
///
/// Entry equality is exact equality of the `(round, fraction)` pair; word
/// collisions between distinct underlying values occur with probability
/// `2^-64` per entry and are ignored.
pub fn estimate_jaccard(a: &Sketch, b: &Sketch) -> Result<f64> {
    check_compatible(a, b)?;
    let eq = a
        .entries
        .iter()
        .zip(&b.entries)
        .filter(|(x, y)| x == y)
        .count();
    Ok(eq as f64 / a.t as f64)
}

/// Sparse view of the `2^b * t`-dimensional 0/1 feature vector obtained by
/// truncating each sketch entry to its low `b` fraction bits: exactly one
/// nonzero coordinate per block of `2^b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    b: u32,
    t: u32,
    indices: Vec<u64>,
}

impl FeatureVector {
    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Index of the nonzero coordinate in each block; entry `j` lies in
    /// `[j * 2^b, (j+1) * 2^b)`.
    pub fn indices(&self) -> &[u64] {
        &self.indices
    }
}

/// Truncates each entry to `b` bits and spreads the results over disjoint
/// blocks. Equal sketch entries always produce equal block indices; distinct
/// entries collide with probability `2^-b`, the usual b-bit estimation bias.
///
/// Panics if `b` is not in `1..=16`.
pub fn featurize_bbit(s: &Sketch, b: u32) -> FeatureVector {
    assert!((1..=16).contains(&b), "b = {b} out of range 1..=16");
    let mask = (1u64 << b) - 1;
    let indices = s
        .entries
        .iter()
        .enumerate()
        .map(|(j, e)| ((j as u64) << b) | (e.fraction & mask))
        .collect();
    FeatureVector { b, t: s.t, indices }
}

/// Sparse dot product of two feature vectors: the number of blocks whose
/// nonzero coordinate coincides, an integer in `[0, t]`.
pub fn dot_estimate(a: &FeatureVector, b: &FeatureVector) -> Result<u32> {
    if a.b != b.b || a.t != b.t {
        return Err(Error::IncompatibleSketches(format!(
            "feature shape (b = {}, t = {}) vs (b = {}, t = {})",
            a.b, a.t, b.b, b.t
        )));
    }
    Ok(a.indices
        .iter()
        .zip(&b.indices)
        .filter(|(x, y)| x == y)
        .count() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::SketchHasher;
    use proptest::prelude::*;

    /// Definition oracle: evaluates the entrywise minimum over all 2t
    /// rounds with no early exit.
    pub(crate) fn brute_force_entries<H: RoundHasher + ?Sized>(
        set: &[ElementId],
        t: u32,
        hasher: &H,
    ) -> Vec<SketchValue> {
        let mut entries = vec![SketchValue::sentinel(t); t as usize];
        for round in 0..2 * t {
            for &a in set {
                let out = hasher.hash_round(round, a, t);
                let v = SketchValue {
                    round,
                    fraction: out.fraction,
                };
                let slot = &mut entries[out.bin as usize];
                if v < *slot {
                    *slot = v;
                }
            }
        }
        entries
    }

    fn ids(xs: &[u64]) -> Vec<ElementId> {
        xs.iter().copied().map(ElementId).collect()
    }

    #[test]
    fn fill_matches_definition_on_singleton() {
        let h = SketchHasher::new(3);
        let set = ids(&[5]);
        let s = fill_sketch(&set, 2, &h).unwrap();
        assert_eq!(s.entries(), brute_force_entries(&set, 2, &h).as_slice());
    }

    #[test]
    fn fill_terminates_and_fills_small_pair() {
        let h = SketchHasher::new(1);
        let (s, stats) = fill_sketch_with_stats(&ids(&[1, 2]), 16, &h).unwrap();
        assert!(s.entries().iter().all(|e| !e.is_sentinel(16)));
        assert!(stats.rounds <= 32);
        // Entry structure: round < t, or the forced round for that bin.
        for (j, e) in s.entries().iter().enumerate() {
            assert!(e.round < 16 || e.round == 16 + j as u32);
        }
    }

    #[test]
    fn fill_with_t_one_collapses_binning() {
        let h = SketchHasher::new(9);
        let set = ids(&[10, 20, 30]);
        let s = fill_sketch(&set, 1, &h).unwrap();
        assert_eq!(s.entries(), brute_force_entries(&set, 1, &h).as_slice());
        assert_eq!(s.entries().len(), 1);
    }

    #[test]
    fn many_sketches_build_concurrently_from_one_hasher() {
        let h = SketchHasher::new(21);
        let reference = fill_sketch(&ids(&[1, 2, 3]), 16, &h).unwrap();
        std::thread::scope(|scope| {
            for _ in 0..4 {
                let (h, reference) = (&h, &reference);
                scope.spawn(move || {
                    let s = fill_sketch(&ids(&[1, 2, 3]), 16, h).unwrap();
                    assert_eq!(&s, reference);
                });
            }
        });
    }

    #[test]
    fn empty_input_is_rejected() {
        let h = SketchHasher::new(0);
        assert!(matches!(fill_sketch(&[], 8, &h), Err(Error::EmptyInput)));
    }

    #[test]
    fn union_is_idempotent_and_respects_subsets() {
        let h = SketchHasher::new(12);
        let a = fill_sketch(&ids(&[1, 2]), 16, &h).unwrap();
        assert_eq!(union_sketch(&a, &a).unwrap(), a);

        let b = fill_sketch(&ids(&[1, 2, 3, 4]), 16, &h).unwrap();
        // A is a subset of B, so the union sketch is S(B).
        assert_eq!(union_sketch(&a, &b).unwrap(), b);
    }

    #[test]
    fn union_equals_sketch_of_union() {
        let h = SketchHasher::new(77);
        let a = fill_sketch(&ids(&[1, 2]), 16, &h).unwrap();
        let b = fill_sketch(&ids(&[2, 3]), 16, &h).unwrap();
        let u = fill_sketch(&ids(&[1, 2, 3]), 16, &h).unwrap();
        assert_eq!(union_sketch(&a, &b).unwrap(), u);
    }

    #[test]
    fn mismatched_sketches_are_rejected() {
        let h1 = SketchHasher::new(1);
        let h2 = SketchHasher::new(2);
        let a = fill_sketch(&ids(&[1]), 8, &h1).unwrap();
        let b = fill_sketch(&ids(&[1]), 16, &h1).unwrap();
        let c = fill_sketch(&ids(&[1]), 8, &h2).unwrap();
        assert!(matches!(
            union_sketch(&a, &b),
            Err(Error::IncompatibleSketches(_))
        ));
        assert!(matches!(
            estimate_jaccard(&a, &c),
            Err(Error::IncompatibleSketches(_))
        ));
    }

    #[test]
    fn estimate_extremes() {
        let h = SketchHasher::new(5);
        let a = fill_sketch(&ids(&[1, 2, 3]), 16, &h).unwrap();
        assert_eq!(estimate_jaccard(&a, &a).unwrap(), 1.0);
        let b = fill_sketch(&ids(&[100, 200, 300]), 16, &h).unwrap();
        assert_eq!(estimate_jaccard(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn features_of_identical_sketches_dot_to_t() {
        let h = SketchHasher::new(8);
        let s = fill_sketch(&ids(&[4, 5, 6]), 16, &h).unwrap();
        let f = featurize_bbit(&s, 8);
        assert_eq!(dot_estimate(&f, &f).unwrap(), 16);
    }

    #[test]
    fn equal_entries_give_equal_block_indices() {
        let h = SketchHasher::new(8);
        let a = fill_sketch(&ids(&[1, 2]), 16, &h).unwrap();
        let b = fill_sketch(&ids(&[2, 3]), 16, &h).unwrap();
        let fa = featurize_bbit(&a, 8);
        let fb = featurize_bbit(&b, 8);
        for j in 0..16 {
            if a.entries()[j] == b.entries()[j] {
                assert_eq!(fa.indices()[j], fb.indices()[j]);
            }
        }
    }

    #[test]
    fn disjoint_features_dot_to_zero() {
        // Wide truncation (b = 16) on disjoint sets: no block index
        // coincides at this fixed seed.
        let h = SketchHasher::new(8);
        let a = fill_sketch(&ids(&[1, 2, 3]), 16, &h).unwrap();
        let b = fill_sketch(&ids(&[100, 200, 300]), 16, &h).unwrap();
        let dot = dot_estimate(&featurize_bbit(&a, 16), &featurize_bbit(&b, 16)).unwrap();
        assert_eq!(dot, 0);
    }

    #[test]
    fn dot_estimate_dominates_exact_match_count() {
        // Truncation can only merge values, never separate them.
        for seed in 0..100u64 {
            let h = SketchHasher::new(seed);
            let a = fill_sketch(&ids(&[1, 2, 3, 4]), 16, &h).unwrap();
            let b = fill_sketch(&ids(&[3, 4, 5, 6]), 16, &h).unwrap();
            let raw = (estimate_jaccard(&a, &b).unwrap() * 16.0).round() as u32;
            let dot = dot_estimate(&featurize_bbit(&a, 8), &featurize_bbit(&b, 8)).unwrap();
            assert!(dot >= raw, "seed {seed}: dot {dot} < raw matches {raw}");
        }
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn featurize_rejects_bad_b() {
        let h = SketchHasher::new(0);
        let s = fill_sketch(&ids(&[1]), 4, &h).unwrap();
        let _ = featurize_bbit(&s, 17);
    }

    #[test]
    fn serialization_reports_corruption_with_offset() {
        let h = SketchHasher::new(0);
        let s = fill_sketch(&ids(&[1, 2]), 4, &h).unwrap();
        let mut bytes = s.to_bytes();
        bytes[0] = b'X';
        match Sketch::read_from(&bytes[..]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
        let good = s.to_bytes();
        match Sketch::read_from(&good[..good.len() - 3]) {
            Err(Error::Format { offset, .. }) => assert!(offset > 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn fill_equals_brute_force(seed in any::<u64>(), t in 1u32..=32, raw in prop::collection::btree_set(0u64..1000, 1..=32)) {
            let set: Vec<ElementId> = raw.into_iter().map(ElementId).collect();
            let h = SketchHasher::new(seed);
            let s = fill_sketch(&set, t, &h).unwrap();
            let oracle = brute_force_entries(&set, t, &h);
            prop_assert_eq!(s.entries(), oracle.as_slice());
        }

        #[test]
        fn entries_are_in_round_range(seed in any::<u64>(), t in 1u32..=32, raw in prop::collection::btree_set(0u64..1000, 1..=16)) {
            let set: Vec<ElementId> = raw.into_iter().map(ElementId).collect();
            let h = SketchHasher::new(seed);
            let s = fill_sketch(&set, t, &h).unwrap();
            for (j, e) in s.entries().iter().enumerate() {
                prop_assert!(e.round < t || e.round == t + j as u32);
            }
        }

        #[test]
        fn serialization_round_trips(seed in any::<u64>(), t in 1u32..=64, raw in prop::collection::btree_set(0u64..1000, 1..=16)) {
            let set: Vec<ElementId> = raw.into_iter().map(ElementId).collect();
            let h = SketchHasher::new(seed);
            let s = fill_sketch(&set, t, &h).unwrap();
            let bytes = s.to_bytes();
            let back = Sketch::read_from(&bytes[..]).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn feature_indices_stay_in_their_block(seed in any::<u64>(), b in 1u32..=16) {
            let h = SketchHasher::new(seed);
            let s = fill_sketch(&[ElementId(1), ElementId(2)], 16, &h).unwrap();
            let f = featurize_bbit(&s, b);
            for (j, &idx) in f.indices().iter().enumerate() {
                let lo = (j as u64) << b;
                prop_assert!(idx >= lo && idx < lo + (1u64 << b));
            }
        }
    }
}
