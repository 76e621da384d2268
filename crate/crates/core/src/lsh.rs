//! Approximate similarity search over a collection of sets.
//!
//! The index keeps `L` bucket tables. Instead of building `L` independent
//! `K`-row MinHash signatures per set (which costs `L * K` hash passes over
//! the set), every set gets one size-`t` similarity sketch and a fixed
//! `L x K` position table `T` samples each signature out of the sketch:
//! signature `i` of set `A` is `(S(A)[T[i,0]], ..., S(A)[T[i,K-1]])`,
//! fingerprinted to 64 bits for constant-size bucket keys. Position
//! `T[i,j]` is drawn from block `j` of the sketch, so the `K` sampled
//! entries are always distinct.
//!
//! Queries collect bucket matches and then filter false positives in two
//! stages: an overflowing match list is sampled and verified exactly once,
//! while a short match list is screened pair-by-pair with the sequential
//! threshold test over small per-set separation sketches before any exact
//! Jaccard computation. The final gate is always exact, so a returned set
//! is never a false positive.
//!
//! The hit probability for a planted close neighbor is a constant; callers
//! who want it amplified can build several independent indexes under
//! different seeds.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::baselines::exact_jaccard_sorted;
use crate::error::{Error, Result};
use crate::hashing::{digest64, ElementId, SketchHasher, MAX_SKETCH_LEN};
use crate::mix::{mix64, reduce, SplitMix64};
use crate::separation::{separate, Decision, SeparationParams};
use crate::sketch::{fill_sketch_with_stats, Sketch};
use crate::wire::{Reader, Writer};

/// Derived index parameters for a collection of `n` sets and similarity
/// thresholds `j2 < j1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LshParams {
    pub j1: f64,
    pub j2: f64,
    pub n: usize,
    /// Signature length `K`.
    pub sig_len: u32,
    /// Number of bucket tables `L`.
    pub num_tables: u32,
    /// Length `t` of the shared sketch signatures are sampled from;
    /// divisible by `sig_len`.
    pub sketch_len: u32,
    /// `log(1/j1) / log(1/j2)`, the exponent governing space and time.
    pub rho: f64,
    /// Separation threshold `(j1 + j2) / 2`.
    pub gamma: f64,
    /// Minimum iterations before the sequential test may exit.
    pub sep_r: u32,
    /// Match-list cap factor `C`: lists longer than `C * L` switch the
    /// query to the sample-one-and-verify path.
    pub cap_factor: u32,
    /// Length of the per-set separation sketch.
    pub sep_len: u32,
}

impl LshParams {
    /// Parameters for the sequential test run during queries.
    pub fn separation_params(&self) -> SeparationParams {
        SeparationParams::new(self.sep_len as usize, self.sep_r as usize, self.gamma)
            .expect("derived separation parameters are valid")
    }

    /// The gap `(j1 - j2) / 2` between the thresholds and `gamma`.
    pub fn separation_gap(&self) -> f64 {
        (self.j1 - self.j2) / 2.0
    }

    /// Whether `sep_r` is large enough for the high-probability guarantee
    /// of the sequential test at this parameter pair's gap.
    pub fn separation_guaranteed(&self) -> bool {
        self.separation_params().supports_gap(self.separation_gap())
    }
}

/// Ceiling with a snap to nearby integers, guarding against `ln`/`pow`
/// results that land a few ulps above an exact integer.
fn ceil_snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x.ceil()
    }
}

/// Derives `(K, L, t, rho, gamma, r, C, t_sep)` for `n` sets:
/// `K = ceil(log n / log(1/j2))`, `L = ceil((1/j1)^K)`,
/// `t = K * ceil(1 + K * (1/j1 - 1))`, `gamma = (j1 + j2) / 2`.
pub fn derive_params(j1: f64, j2: f64, n: usize) -> Result<LshParams> {
    if !j1.is_finite() || !j2.is_finite() || !(0.0 < j2 && j2 < j1 && j1 < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "need 0 < j2 < j1 < 1, got j1 = {j1}, j2 = {j2}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameters(
            "collection size must be >= 1".into(),
        ));
    }
    // K = 0 only for n = 1, where one sampled entry per table is enough.
    let sig_len = (ceil_snap((n as f64).ln() / (1.0 / j2).ln()) as u32).max(1);
    let tables = ceil_snap((1.0 / j1).powi(sig_len as i32));
    if !(1.0..=16_777_216.0).contains(&tables) {
        return Err(Error::InvalidParameters(format!(
            "parameters give {tables} tables"
        )));
    }
    let num_tables = tables as u32;
    let block = ceil_snap(1.0 + sig_len as f64 * (1.0 / j1 - 1.0)) as u32;
    let sketch_len = sig_len * block;
    let sep_len = 64u32.max(16 * ceil_snap((n as f64 + 1.0).log2()) as u32);
    if sketch_len > MAX_SKETCH_LEN || sep_len > MAX_SKETCH_LEN {
        return Err(Error::InvalidParameters(format!(
            "derived sketch lengths {sketch_len}/{sep_len} exceed {MAX_SKETCH_LEN}"
        )));
    }
    Ok(LshParams {
        j1,
        j2,
        n,
        sig_len,
        num_tables,
        sketch_len,
        rho: (1.0 / j1).ln() / (1.0 / j2).ln(),
        gamma: (j1 + j2) / 2.0,
        sep_r: 16,
        cap_factor: 32,
        sep_len,
    })
}

/// The `L x K` position table: row `i`, column `j` holds a position drawn
/// uniformly from block `j` of the sketch, rows drawn independently from a
/// seeded stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureTable {
    num_tables: u32,
    sig_len: u32,
    sketch_len: u32,
    positions: Vec<u32>,
}

impl SignatureTable {
    pub fn generate(params: &LshParams, seed: u64) -> SignatureTable {
        let block = params.sketch_len / params.sig_len;
        let mut stream = SplitMix64::new(mix64(seed ^ 0x7369_675f_7461_626c));
        let mut positions = Vec::with_capacity((params.num_tables * params.sig_len) as usize);
        for _ in 0..params.num_tables {
            for j in 0..params.sig_len {
                positions.push(j * block + reduce(stream.next_u64(), block));
            }
        }
        SignatureTable {
            num_tables: params.num_tables,
            sig_len: params.sig_len,
            sketch_len: params.sketch_len,
            positions,
        }
    }

    pub fn num_tables(&self) -> u32 {
        self.num_tables
    }

    pub fn position(&self, table: usize, slot: usize) -> usize {
        self.positions[table * self.sig_len as usize + slot] as usize
    }
}

/// Samples the `L` signatures of a sketch through the position table and
/// fingerprints each sampled `K`-tuple of `(round, fraction)` records to 64
/// bits. Equal tuples always map to equal fingerprints; unequal tuples
/// collide with probability `2^-64`.
pub fn build_signatures(sketch: &Sketch, table: &SignatureTable) -> Result<Vec<u64>> {
    if sketch.t() != table.sketch_len {
        return Err(Error::IncompatibleSketches(format!(
            "sketch length {} does not match table's {}",
            sketch.t(),
            table.sketch_len
        )));
    }
    let key = mix64(sketch.seed() ^ 0x7369_675f_6669_6e67);
    let mut fingerprints = Vec::with_capacity(table.num_tables as usize);
    let mut buf = Vec::with_capacity(12 * table.sig_len as usize);
    for i in 0..table.num_tables as usize {
        buf.clear();
        for j in 0..table.sig_len as usize {
            let e = sketch.entries()[table.position(i, j)];
            buf.extend_from_slice(&e.round.to_le_bytes());
            buf.extend_from_slice(&e.fraction.to_le_bytes());
        }
        fingerprints.push(digest64(&buf, key));
    }
    Ok(fingerprints)
}

fn sep_seed(seed: u64) -> u64 {
    mix64(seed ^ 0x7365_705f_736b_6574)
}

/// A successful query: the id of the returned set and its exact Jaccard
/// similarity to the query (always strictly above `j2`).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMatch {
    pub id: String,
    pub jaccard: f64,
}

/// Per-query work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Hash evaluations spent building the query's sketches.
    pub hash_evals: u64,
    /// Bucket match pairs collected (capped at `C * L`).
    pub pairs_scanned: u64,
    /// Sequential tests run.
    pub separations: u64,
    /// Exact Jaccard computations performed.
    pub exact_checks: u64,
    /// Whether the match list overflowed `C * L`.
    pub overflowed: bool,
}

/// The built index: immutable after construction, safe to query from any
/// number of threads.
pub struct LshIndex {
    params: LshParams,
    seed: u64,
    table: SignatureTable,
    main_hasher: SketchHasher,
    sep_hasher: SketchHasher,
    buckets: Vec<HashMap<u64, Vec<u32>>>,
    ids: Vec<String>,
    sets: Vec<Vec<ElementId>>,
    sep_sketches: Vec<Sketch>,
}

const INDEX_MAGIC: &[u8; 4] = b"FSLI";
const INDEX_VERSION: u32 = 1;

impl LshIndex {
    /// Builds the index over `(id, set)` pairs. Ids must be unique and sets
    /// nonempty. An empty collection yields a valid index whose queries all
    /// return `None`.
    pub fn build(
        collection: &[(String, Vec<ElementId>)],
        j1: f64,
        j2: f64,
        seed: u64,
    ) -> Result<LshIndex> {
        let params = derive_params(j1, j2, collection.len().max(1))?;
        let table = SignatureTable::generate(&params, seed);
        let main_hasher = SketchHasher::new(seed);
        let sep_hasher = SketchHasher::new(sep_seed(seed));
        let mut seen = HashMap::new();
        let mut ids = Vec::with_capacity(collection.len());
        let mut sets = Vec::with_capacity(collection.len());
        let mut sep_sketches = Vec::with_capacity(collection.len());
        let mut buckets = vec![HashMap::new(); params.num_tables as usize];
        for (idx, (id, raw)) in collection.iter().enumerate() {
            if seen.insert(id.clone(), ()).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
            let mut set = raw.clone();
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::EmptyInput);
            }
            let (sketch, _) = fill_sketch_with_stats(&set, params.sketch_len, &main_hasher)?;
            let fingerprints = build_signatures(&sketch, &table)?;
            for (i, fp) in fingerprints.into_iter().enumerate() {
                buckets[i]
                    .entry(fp)
                    .or_insert_with(Vec::new)
                    .push(idx as u32);
            }
            let (sep, _) = fill_sketch_with_stats(&set, params.sep_len, &sep_hasher)?;
            ids.push(id.clone());
            sets.push(set);
            sep_sketches.push(sep);
        }
        Ok(LshIndex {
            params,
            seed,
            table,
            main_hasher,
            sep_hasher,
            buckets,
            ids,
            sets,
            sep_sketches,
        })
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Total entries across all bucket tables; exactly `n * L`.
    pub fn bucket_entry_count(&self) -> usize {
        self.buckets
            .iter()
            .map(|b| b.values().map(Vec::len).sum::<usize>())
            .sum()
    }

    pub fn query(&self, q: &[ElementId]) -> Result<Option<QueryMatch>> {
        self.query_with_stats(q).map(|(m, _)| m)
    }

    /// Looks up a set similar to `q`, returning the first indexed set whose
    /// exact Jaccard similarity exceeds `j2`, or `None`.
    ///
    /// Deterministic for a fixed index: candidate order is table order then
    /// insertion order, and the sample drawn on match-list overflow is
    /// seeded from the index seed and the query's fingerprints.
    pub fn query_with_stats(&self, q: &[ElementId]) -> Result<(Option<QueryMatch>, QueryStats)> {
        let mut query = q.to_vec();
        query.sort_unstable();
        query.dedup();
        if query.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut stats = QueryStats::default();
        let (sketch, fill) =
            fill_sketch_with_stats(&query, self.params.sketch_len, &self.main_hasher)?;
        stats.hash_evals += fill.hash_evals;
        let fingerprints = build_signatures(&sketch, &self.table)?;

        let cap = self.params.cap_factor as usize * self.params.num_tables as usize;
        let mut matches: Vec<u32> = Vec::new();
        'collect: for (i, fp) in fingerprints.iter().enumerate() {
            if let Some(list) = self.buckets[i].get(fp) {
                for &set_idx in list {
                    if matches.len() == cap {
                        stats.overflowed = true;
                        break 'collect;
                    }
                    matches.push(set_idx);
                }
            }
        }
        stats.pairs_scanned = matches.len() as u64;

        if stats.overflowed {
            // Too many matches to screen one by one: most of them are good
            // with decent probability, so sample one and verify it exactly.
            let mut key = self.seed ^ 0x6c73_685f_7175_6572;
            for fp in &fingerprints {
                key = mix64(key ^ fp);
            }
            let draw = SplitMix64::new(key).next_u64();
            let pick = ((draw as u128 * matches.len() as u128) >> 64) as usize;
            let idx = matches[pick] as usize;
            stats.exact_checks += 1;
            let jaccard = exact_jaccard_sorted(&self.sets[idx], &query);
            if jaccard > self.params.j2 {
                return Ok((
                    Some(QueryMatch {
                        id: self.ids[idx].clone(),
                        jaccard,
                    }),
                    stats,
                ));
            }
            return Ok((None, stats));
        }

        if matches.is_empty() {
            return Ok((None, stats));
        }

        // Short match list: screen each pair with the sequential test over
        // the separation sketches, verify survivors exactly.
        let sep_params = self.params.separation_params();
        let (q_sep, sep_fill) =
            fill_sketch_with_stats(&query, self.params.sep_len, &self.sep_hasher)?;
        stats.hash_evals += sep_fill.hash_evals;
        for &set_idx in &matches {
            let idx = set_idx as usize;
            let indicators: Vec<f64> = self.sep_sketches[idx]
                .matches(&q_sep)?
                .into_iter()
                .map(|m| if m { 1.0 } else { 0.0 })
                .collect();
            stats.separations += 1;
            if separate(&indicators, &sep_params).decision == Decision::Above {
                stats.exact_checks += 1;
                let jaccard = exact_jaccard_sorted(&self.sets[idx], &query);
                if jaccard > self.params.j2 {
                    return Ok((
                        Some(QueryMatch {
                            id: self.ids[idx].clone(),
                            jaccard,
                        }),
                        stats,
                    ));
                }
            }
        }
        Ok((None, stats))
    }

    /// Serializes the whole index: header and parameters, the position
    /// table, the set store, the separation sketches, then the bucket
    /// tables (length-prefixed).
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = Writer::new(w);
        w.write_bytes(INDEX_MAGIC)?;
        w.write_u32(INDEX_VERSION)?;
        w.write_f64(self.params.j1)?;
        w.write_f64(self.params.j2)?;
        w.write_u64(self.params.n as u64)?;
        w.write_u32(self.params.sig_len)?;
        w.write_u32(self.params.num_tables)?;
        w.write_u32(self.params.sketch_len)?;
        w.write_f64(self.params.rho)?;
        w.write_f64(self.params.gamma)?;
        w.write_u32(self.params.sep_r)?;
        w.write_u32(self.params.cap_factor)?;
        w.write_u32(self.params.sep_len)?;
        w.write_u64(self.seed)?;
        for &p in &self.table.positions {
            w.write_u32(p)?;
        }
        w.write_u64(self.sets.len() as u64)?;
        for (id, set) in self.ids.iter().zip(&self.sets) {
            w.write_u32(id.len() as u32)?;
            w.write_bytes(id.as_bytes())?;
            w.write_u64(set.len() as u64)?;
            for e in set {
                w.write_u64(e.0)?;
            }
        }
        for sep in &self.sep_sketches {
            for e in sep.entries() {
                w.write_u32(e.round)?;
                w.write_u64(e.fraction)?;
            }
        }
        for bucket in &self.buckets {
            // Sort keys for a canonical byte representation.
            let mut keys: Vec<&u64> = bucket.keys().collect();
            keys.sort_unstable();
            w.write_u64(bucket.len() as u64)?;
            for &fp in keys {
                let list = &bucket[&fp];
                w.write_u64(fp)?;
                w.write_u32(list.len() as u32)?;
                for &idx in list {
                    w.write_u32(idx)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<LshIndex> {
        let mut r = Reader::new(r);
        r.expect_magic(INDEX_MAGIC)?;
        let version = r.read_u32()?;
        if version != INDEX_VERSION {
            return Err(r.bad(format!("unsupported version {version}")));
        }
        let j1 = r.read_f64()?;
        let j2 = r.read_f64()?;
        let n = r.read_u64()? as usize;
        let sig_len = r.read_u32()?;
        let num_tables = r.read_u32()?;
        let sketch_len = r.read_u32()?;
        let rho = r.read_f64()?;
        let gamma = r.read_f64()?;
        let sep_r = r.read_u32()?;
        let cap_factor = r.read_u32()?;
        let sep_len = r.read_u32()?;
        if sig_len == 0
            || num_tables == 0
            || sketch_len == 0
            || sketch_len > MAX_SKETCH_LEN
            || sep_len == 0
            || sep_len > MAX_SKETCH_LEN
            || sketch_len % sig_len != 0
        {
            return Err(r.bad("inconsistent parameters"));
        }
        let params = LshParams {
            j1,
            j2,
            n,
            sig_len,
            num_tables,
            sketch_len,
            rho,
            gamma,
            sep_r,
            cap_factor,
            sep_len,
        };
        let seed = r.read_u64()?;
        let mut positions = Vec::with_capacity((num_tables * sig_len) as usize);
        for _ in 0..num_tables * sig_len {
            let p = r.read_u32()?;
            if p >= sketch_len {
                return Err(r.bad(format!("table position {p} out of range")));
            }
            positions.push(p);
        }
        let table = SignatureTable {
            num_tables,
            sig_len,
            sketch_len,
            positions,
        };
        let num_sets = r.read_u64()? as usize;
        let mut ids = Vec::with_capacity(num_sets);
        let mut sets = Vec::with_capacity(num_sets);
        for _ in 0..num_sets {
            let id_len = r.read_u32()? as usize;
            let mut id_bytes = vec![0u8; id_len];
            r.read_bytes(&mut id_bytes)?;
            let id = String::from_utf8(id_bytes).map_err(|_| r.bad("set id is not valid UTF-8"))?;
            let set_len = r.read_u64()? as usize;
            let mut set = Vec::with_capacity(set_len);
            for _ in 0..set_len {
                set.push(ElementId(r.read_u64()?));
            }
            ids.push(id);
            sets.push(set);
        }
        let sseed = sep_seed(seed);
        let mut sep_sketches = Vec::with_capacity(num_sets);
        for _ in 0..num_sets {
            let mut entries = Vec::with_capacity(sep_len as usize);
            for _ in 0..sep_len {
                let round = r.read_u32()?;
                if round > 2 * sep_len {
                    return Err(r.bad(format!("separation round {round} out of range")));
                }
                let fraction = r.read_u64()?;
                entries.push(crate::sketch::SketchValue { round, fraction });
            }
            sep_sketches.push(Sketch::from_raw(sep_len, sseed, entries));
        }
        let mut buckets = Vec::with_capacity(num_tables as usize);
        for _ in 0..num_tables {
            let count = r.read_u64()? as usize;
            let mut bucket = HashMap::with_capacity(count);
            for _ in 0..count {
                let fp = r.read_u64()?;
                let list_len = r.read_u32()? as usize;
                let mut list = Vec::with_capacity(list_len);
                for _ in 0..list_len {
                    let idx = r.read_u32()?;
                    if idx as usize >= num_sets {
                        return Err(r.bad(format!("bucket references set {idx} of {num_sets}")));
                    }
                    list.push(idx);
                }
                if bucket.insert(fp, list).is_some() {
                    return Err(r.bad("duplicate fingerprint in bucket table"));
                }
            }
            buckets.push(bucket);
        }
        Ok(LshIndex {
            params,
            seed,
            table,
            main_hasher: SketchHasher::new(seed),
            sep_hasher: SketchHasher::new(sseed),
            buckets,
            ids,
            sets,
            sep_sketches,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("vec write cannot fail");
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::fill_sketch;

    fn ids(xs: &[u64]) -> Vec<ElementId> {
        xs.iter().copied().map(ElementId).collect()
    }

    #[test]
    fn derived_params_match_hand_evaluation() {
        let p = derive_params(0.5, 0.25, 100).unwrap();
        assert_eq!(p.sig_len, 4);
        assert_eq!(p.num_tables, 16);
        assert_eq!(p.sketch_len, 20);
        assert!((p.rho - 0.5).abs() < 1e-12);
        assert!((p.gamma - 0.375).abs() < 1e-12);
        assert_eq!(p.sketch_len % p.sig_len, 0);

        let small = derive_params(0.5, 0.25, 2).unwrap();
        assert_eq!(small.sig_len, 1);
        assert_eq!(small.num_tables, 2);
        assert_eq!(small.sketch_len, 2);
    }

    #[test]
    fn param_ordering_is_enforced() {
        assert!(matches!(
            derive_params(0.25, 0.5, 10),
            Err(Error::InvalidParameters(_))
        ));
        assert!(matches!(
            derive_params(0.5, 0.5, 10),
            Err(Error::InvalidParameters(_))
        ));
        assert!(matches!(
            derive_params(1.0, 0.5, 10),
            Err(Error::InvalidParameters(_))
        ));
    }

    #[test]
    fn sep_len_has_a_floor_and_grows_with_n() {
        assert_eq!(derive_params(0.5, 0.25, 1).unwrap().sep_len, 64);
        assert_eq!(derive_params(0.5, 0.25, 101).unwrap().sep_len, 112);
    }

    #[test]
    fn signatures_are_reproducible_and_respect_blocks() {
        let p = derive_params(0.5, 0.25, 100).unwrap();
        let table = SignatureTable::generate(&p, 9);
        let block = p.sketch_len / p.sig_len;
        for i in 0..p.num_tables as usize {
            for j in 0..p.sig_len as usize {
                let pos = table.position(i, j) as u32;
                assert!(pos >= j as u32 * block && pos < (j as u32 + 1) * block);
            }
        }
        assert_eq!(table, SignatureTable::generate(&p, 9));

        let h = SketchHasher::new(9);
        let s = fill_sketch(&ids(&[1, 2, 3]), p.sketch_len, &h).unwrap();
        assert_eq!(
            build_signatures(&s, &table).unwrap(),
            build_signatures(&s, &table).unwrap()
        );
    }

    #[test]
    fn fingerprints_match_exactly_when_tuples_match() {
        // 1e4 random sketch pairs: per table, the sampled tuples are equal
        // iff the fingerprints are equal (no collision observed among
        // unequal tuples).
        let p = derive_params(0.5, 0.25, 16).unwrap();
        for seed in 0..10_000u64 {
            let h = SketchHasher::new(seed);
            let table = SignatureTable::generate(&p, seed);
            let a = fill_sketch(&ids(&[1, 2, 3]), p.sketch_len, &h).unwrap();
            let b = fill_sketch(&ids(&[2, 3, 4]), p.sketch_len, &h).unwrap();
            let fa = build_signatures(&a, &table).unwrap();
            let fb = build_signatures(&b, &table).unwrap();
            for i in 0..p.num_tables as usize {
                let tuples_equal = (0..p.sig_len as usize).all(|j| {
                    a.entries()[table.position(i, j)] == b.entries()[table.position(i, j)]
                });
                assert_eq!(tuples_equal, fa[i] == fb[i], "seed {seed}, table {i}");
            }
        }
    }

    #[test]
    fn empty_collection_yields_working_index() {
        let idx = LshIndex::build(&[], 0.5, 0.25, 1).unwrap();
        assert!(idx.is_empty());
        assert_eq!(idx.query(&ids(&[1, 2])).unwrap(), None);
    }

    #[test]
    fn single_set_occupies_one_bucket_per_table() {
        let idx = LshIndex::build(&[("a".into(), ids(&[1, 2, 3]))], 0.5, 0.25, 1).unwrap();
        assert_eq!(idx.bucket_entry_count(), idx.params().num_tables as usize);
        for bucket in &idx.buckets {
            assert_eq!(bucket.values().map(Vec::len).sum::<usize>(), 1);
        }
    }

    #[test]
    fn bucket_entries_count_is_n_times_l() {
        let collection: Vec<(String, Vec<ElementId>)> = (0..20u64)
            .map(|i| (format!("s{i}"), ids(&[i * 10, i * 10 + 1, i * 10 + 2])))
            .collect();
        let idx = LshIndex::build(&collection, 0.5, 0.25, 3).unwrap();
        assert_eq!(
            idx.bucket_entry_count(),
            20 * idx.params().num_tables as usize
        );
    }

    #[test]
    fn duplicate_ids_and_empty_sets_are_rejected() {
        let dup = vec![("a".to_string(), ids(&[1])), ("a".to_string(), ids(&[2]))];
        assert!(matches!(
            LshIndex::build(&dup, 0.5, 0.25, 0),
            Err(Error::DuplicateId(_))
        ));
        let empty = vec![("a".to_string(), vec![])];
        assert!(matches!(
            LshIndex::build(&empty, 0.5, 0.25, 0),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn identical_query_is_found_with_similarity_one() {
        let collection: Vec<(String, Vec<ElementId>)> = (0..10u64)
            .map(|i| (format!("s{i}"), ids(&[i * 100, i * 100 + 1, i * 100 + 2])))
            .collect();
        let idx = LshIndex::build(&collection, 0.5, 0.25, 7).unwrap();
        let (m, stats) = idx.query_with_stats(&ids(&[300, 301, 302])).unwrap();
        let m = m.expect("identical set must match every table");
        assert_eq!(m.id, "s3");
        assert_eq!(m.jaccard, 1.0);
        assert!(stats.pairs_scanned >= idx.params().num_tables as u64);
    }

    #[test]
    fn disjoint_query_returns_not_found_with_little_work() {
        let collection: Vec<(String, Vec<ElementId>)> = (0..50u64)
            .map(|i| (format!("s{i}"), ids(&[i * 10, i * 10 + 1, i * 10 + 3])))
            .collect();
        let idx = LshIndex::build(&collection, 0.5, 0.25, 11).unwrap();
        let (m, stats) = idx
            .query_with_stats(&ids(&[100_000, 100_001, 100_002]))
            .unwrap();
        assert_eq!(m, None);
        assert!(
            stats.pairs_scanned <= idx.params().num_tables as u64,
            "scanned {} pairs",
            stats.pairs_scanned
        );
    }

    #[test]
    fn empty_query_is_rejected() {
        let idx = LshIndex::build(&[("a".into(), ids(&[1]))], 0.5, 0.25, 0).unwrap();
        assert!(matches!(idx.query(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn persistence_round_trips_and_reports_corruption() {
        let collection: Vec<(String, Vec<ElementId>)> = (0..10u64)
            .map(|i| (format!("set-{i}"), ids(&[i, i + 100, i + 200])))
            .collect();
        let idx = LshIndex::build(&collection, 0.5, 0.25, 5).unwrap();
        let bytes = idx.to_bytes();
        let back = LshIndex::read_from(&bytes[..]).unwrap();
        assert_eq!(back.params(), idx.params());
        assert_eq!(back.seed(), idx.seed());
        assert_eq!(back.bucket_entry_count(), idx.bucket_entry_count());
        // Queries behave identically after a round trip.
        let q = ids(&[3, 103, 203]);
        assert_eq!(back.query(&q).unwrap(), idx.query(&q).unwrap());
        assert_eq!(back.to_bytes(), bytes);

        match LshIndex::read_from(&bytes[..bytes.len() - 5]) {
            Err(Error::Format { offset, .. }) => assert!(offset > 0),
            other => panic!("expected format error, got {:?}", other.map(|_| ())),
        }
        let mut bad = bytes.clone();
        bad[1] = b'?';
        assert!(matches!(
            LshIndex::read_from(&bad[..]),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn concurrent_queries_share_the_index() {
        let collection: Vec<(String, Vec<ElementId>)> = (0..20u64)
            .map(|i| (format!("s{i}"), ids(&[i * 7, i * 7 + 1, i * 7 + 2])))
            .collect();
        let idx = LshIndex::build(&collection, 0.5, 0.25, 2).unwrap();
        std::thread::scope(|scope| {
            for k in 0..4u64 {
                let idx = &idx;
                scope.spawn(move || {
                    let q = ids(&[k * 7, k * 7 + 1, k * 7 + 2]);
                    let m = idx.query(&q).unwrap().expect("own set matches");
                    assert_eq!(m.jaccard, 1.0);
                });
            }
        });
    }
}
