//! Reference competitors for the fast sketch: per-row MinHash,
//! one-permutation hashing (OPH), and two densification schemes for OPH's
//! empty bins.
//!
//! MinHash keeps the alignment property and strong concentration but costs
//! `t` hash evaluations per element. OPH costs one evaluation per element
//! but can leave bins empty when the set is small; densification copies
//! values into the empty bins, which is exactly where its estimates go bad:
//! a set whose elements all land in one bin densifies into a single-value
//! sketch no matter which scheme fills the holes.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hashing::{ElementId, RoundHasher, MAX_ROWS};
use crate::mix::{mix64, reduce, SplitMix64};
use crate::wire::{Reader, Writer};

/// A length-`t` baseline sketch of 64-bit values. For OPH the `filled` mask
/// records which bins saw an element; MinHash sketches are always full.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineSketch {
    t: u32,
    seed: u64,
    entries: Vec<u64>,
    filled: Vec<bool>,
}

const BASELINE_MAGIC: &[u8; 4] = b"FSKB";

impl BaselineSketch {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn is_filled(&self, bin: usize) -> bool {
        self.filled[bin]
    }

    pub fn filled_count(&self) -> u32 {
        self.filled.iter().filter(|&&f| f).count() as u32
    }

    /// Fraction of positions where both sketches hold equal filled values.
    pub fn estimate_jaccard(&self, other: &BaselineSketch) -> Result<f64> {
        if self.t != other.t {
            return Err(Error::IncompatibleSketches(format!(
                "length {} vs {}",
                self.t, other.t
            )));
        }
        let eq = (0..self.t as usize)
            .filter(|&j| self.filled[j] && other.filled[j] && self.entries[j] == other.entries[j])
            .count();
        Ok(eq as f64 / self.t as f64)
    }

    /// Same record layout as the main sketch format, magic `FSKB`: header
    /// then `t` records of `(filled: u32, value: u64)`, little endian.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = Writer::new(w);
        w.write_bytes(BASELINE_MAGIC)?;
        w.write_u32(self.t)?;
        w.write_u64(self.seed)?;
        for j in 0..self.t as usize {
            w.write_u32(self.filled[j] as u32)?;
            w.write_u64(self.entries[j])?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<BaselineSketch> {
        let mut r = Reader::new(r);
        r.expect_magic(BASELINE_MAGIC)?;
        let t = r.read_u32()?;
        if t == 0 || t > MAX_ROWS {
            return Err(r.bad(format!("sketch length {t} out of range")));
        }
        let seed = r.read_u64()?;
        let mut entries = Vec::with_capacity(t as usize);
        let mut filled = Vec::with_capacity(t as usize);
        for _ in 0..t {
            let flag = r.read_u32()?;
            if flag > 1 {
                return Err(r.bad(format!("bad filled flag {flag}")));
            }
            filled.push(flag == 1);
            entries.push(r.read_u64()?);
        }
        Ok(BaselineSketch {
            t,
            seed,
            entries,
            filled,
        })
    }
}

/// Classic `t x MinHash`: entry `i` is the minimum over the set of a 64-bit
/// hash keyed by `(i, a)`. Rows come from the shared hasher rather than `t`
/// separate structures; the distribution is the same and one seed suffices.
/// Costs exactly `t * |set|` hash evaluations.
pub fn minhash_sketch<H: RoundHasher + ?Sized>(
    set: &[ElementId],
    t: u32,
    hasher: &H,
) -> Result<BaselineSketch> {
    assert!((1..=MAX_ROWS).contains(&t), "row count {t} out of range");
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut entries = vec![u64::MAX; t as usize];
    for row in 0..t {
        for &a in set {
            let word = hasher.hash_words(row, a).1;
            if word < entries[row as usize] {
                entries[row as usize] = word;
            }
        }
    }
    Ok(BaselineSketch {
        t,
        seed: hasher.seed(),
        entries,
        filled: vec![true; t as usize],
    })
}

/// One-permutation hashing: a single pass over the set, bin from one word of
/// the evaluation and value from the other, keeping the minimum value per
/// bin. Bins that no element reaches stay empty and are flagged.
pub fn oph_sketch<H: RoundHasher + ?Sized>(
    set: &[ElementId],
    t: u32,
    hasher: &H,
) -> Result<BaselineSketch> {
    assert!((1..=MAX_ROWS).contains(&t), "bin count {t} out of range");
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut entries = vec![u64::MAX; t as usize];
    let mut filled = vec![false; t as usize];
    for &a in set {
        let (bin_word, value) = hasher.hash_words(0, a);
        let bin = reduce(bin_word, t) as usize;
        if !filled[bin] {
            filled[bin] = true;
            entries[bin] = value;
        } else if value < entries[bin] {
            entries[bin] = value;
        }
    }
    Ok(BaselineSketch {
        t,
        seed: hasher.seed(),
        entries,
        filled,
    })
}

/// Mixes a borrowed value with the cyclic distance to its donor, so borrowed
/// entries only match borrowed entries with the same provenance.
#[inline]
fn offset_tag(value: u64, distance: u64) -> u64 {
    mix64(value ^ distance.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Rotation densification: each empty bin takes the value of the nearest
/// filled bin to its right (cyclically), tagged with the copy distance.
/// Full sketches pass through unchanged.
pub fn densify_rotation(s: &BaselineSketch) -> Result<BaselineSketch> {
    if s.filled_count() == 0 {
        return Err(Error::EmptyInput);
    }
    let t = s.t as usize;
    let mut out = s.clone();
    for j in 0..t {
        if s.filled[j] {
            continue;
        }
        for k in 1..t as u64 {
            let src = (j + k as usize) % t;
            if s.filled[src] {
                out.entries[j] = offset_tag(s.entries[src], k);
                out.filled[j] = true;
                break;
            }
        }
    }
    debug_assert_eq!(out.filled_count(), s.t);
    Ok(out)
}

/// Re-hash densification: each empty bin probes a pseudorandom sequence of
/// bins (a pure function of the sketch seed and the bin index, so two
/// sketches with the same seed walk identical sequences) and copies the
/// first filled bin it hits.
pub fn densify_optimal(s: &BaselineSketch) -> Result<BaselineSketch> {
    if s.filled_count() == 0 {
        return Err(Error::EmptyInput);
    }
    let t = s.t;
    let mut out = s.clone();
    for j in 0..t as usize {
        if s.filled[j] {
            continue;
        }
        let mut probes = SplitMix64::new(mix64(s.seed ^ 0x6f70_685f_7072_6f62 ^ j as u64));
        // A filled bin is hit with probability >= 1/t per probe; the cap is
        // unreachable in practice and only keeps the loop provably finite.
        let mut donor = None;
        for _ in 0..64 * t as u64 {
            let p = reduce(probes.next_u64(), t) as usize;
            if s.filled[p] {
                donor = Some(p);
                break;
            }
        }
        let donor = donor.unwrap_or_else(|| {
            (1..t as usize)
                .map(|k| (j + k) % t as usize)
                .find(|&p| s.filled[p])
                .expect("at least one filled bin")
        });
        out.entries[j] = s.entries[donor];
        out.filled[j] = true;
    }
    debug_assert_eq!(out.filled_count(), t);
    Ok(out)
}

/// Exact Jaccard similarity `|A ∩ B| / |A ∪ B|` by sorted merge.
/// Duplicates in the inputs are ignored.
pub fn exact_jaccard(a: &[ElementId], b: &[ElementId]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut xs: Vec<u64> = a.iter().map(|e| e.0).collect();
    let mut ys: Vec<u64> = b.iter().map(|e| e.0).collect();
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let (mut i, mut j) = (0, 0);
    let mut intersection = 0usize;
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = xs.len() + ys.len() - intersection;
    Ok(intersection as f64 / union as f64)
}

/// Exact Jaccard over already sorted, deduplicated slices. Used on stored
/// index sets where re-sorting per query would be wasteful.
pub(crate) fn exact_jaccard_sorted(xs: &[ElementId], ys: &[ElementId]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut intersection = 0usize;
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = xs.len() + ys.len() - intersection;
    intersection as f64 / union as f64
}
