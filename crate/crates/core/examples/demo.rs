//! Walkthrough of the main surfaces: sketching, estimation, union,
//! b-bit features, and the search index.

use simsketch::baselines::exact_jaccard;
use simsketch::lsh::LshIndex;
use simsketch::{
    dot_estimate, estimate_jaccard, featurize_bbit, fill_sketch, union_sketch, ElementId,
    SketchHasher,
};

fn ids(range: std::ops::Range<u64>) -> Vec<ElementId> {
    range.map(ElementId).collect()
}

fn main() {
    let hasher = SketchHasher::new(42);
    let t = 256;

    // Two sets sharing half their elements.
    let a = ids(0..1000);
    let b = ids(500..1500);
    let sa = fill_sketch(&a, t, &hasher).unwrap();
    let sb = fill_sketch(&b, t, &hasher).unwrap();
    println!(
        "estimate {:.4} vs exact {:.4}",
        estimate_jaccard(&sa, &sb).unwrap(),
        exact_jaccard(&a, &b).unwrap()
    );

    // The union sketch is computable from the two sketches alone.
    let su = union_sketch(&sa, &sb).unwrap();
    assert_eq!(su, fill_sketch(&ids(0..1500), t, &hasher).unwrap());

    // b-bit features: a compact vector whose dot product estimates the
    // same similarity with a small truncation bias.
    let fa = featurize_bbit(&sa, 8);
    let fb = featurize_bbit(&sb, 8);
    println!(
        "b-bit dot estimate {:.4}",
        dot_estimate(&fa, &fb).unwrap() as f64 / t as f64
    );

    // Index a small collection and look up a near neighbor.
    let collection: Vec<(String, Vec<ElementId>)> = (0..50u64)
        .map(|i| (format!("doc{i}"), ids(i * 1000..i * 1000 + 600)))
        .collect();
    let index = LshIndex::build(&collection, 0.5, 0.25, 7).unwrap();
    let query = ids(3000..3550); // overlaps doc3 heavily
    match index.query(&query).unwrap() {
        Some(m) => println!("query matched {} with exact Jaccard {:.4}", m.id, m.jaccard),
        None => println!("no neighbor above the threshold"),
    }
}
