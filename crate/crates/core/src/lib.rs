//! Similarity sketching for Jaccard similarity estimation and search.
//!
//! The centerpiece is a size-`t` sketch built in expected `O(t log t + |A|)`
//! time that keeps the alignment property of classic MinHash: entry `i` of
//! one sketch is compared only against entry `i` of another, so the fraction
//! of equal entries is an unbiased, well-concentrated estimate of the Jaccard
//! similarity of the underlying sets.
//!
//! The crate also ships the baselines the sketch is usually measured against
//! (per-row MinHash and one-permutation hashing with two densification
//! schemes), a sequential threshold test for deciding whether a similarity
//! exceeds a cutoff without reading a whole sketch, and an LSH index for
//! approximate similarity search over a collection of sets.

pub mod baselines;
pub mod error;
pub mod hashing;
pub mod lsh;
pub mod separation;
pub mod sketch;

mod mix;
mod wire;

pub use error::{Error, Result};
pub use hashing::{ElementId, HashOutput, RoundHasher, SipRoundHasher, SketchHasher};
pub use sketch::{
    dot_estimate, estimate_jaccard, featurize_bbit, fill_sketch, fill_sketch_with_stats,
    union_sketch, FeatureVector, FillStats, Sketch, SketchValue,
};
