//! Structured output rows and their CSV / JSON-lines encodings.
//!
//! Both encodings round-trip exactly: parsing an emitted file and
//! re-rendering it reproduces the bytes. Floats are printed with Rust's
//! shortest round-trip formatting, which is canonical for both readers.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// A row type with a fixed CSV schema.
pub trait Row: Sized {
    fn csv_header() -> &'static str;
    fn to_csv(&self) -> String;
    fn from_csv(line: &str) -> Result<Self, String>;
}

fn field<'a>(parts: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<&'a str, String> {
    parts.next().ok_or_else(|| format!("missing field {name}"))
}

fn parse<T: std::str::FromStr>(raw: &str, name: &str) -> Result<T, String> {
    raw.parse()
        .map_err(|_| format!("field {name}: cannot parse {raw:?}"))
}

fn opt_f64_to_csv(v: &Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn opt_f64_from_csv(raw: &str, name: &str) -> Result<Option<f64>, String> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse(raw, name).map(Some)
    }
}

/// One lattice point of an estimate histogram: `estimate = numerator / t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub method: String,
    pub t: u32,
    pub seed: u64,
    pub numerator: u32,
    pub estimate: f64,
    pub count: u64,
    pub frequency: f64,
}

impl Row for HistogramRow {
    fn csv_header() -> &'static str {
        "method,t,seed,numerator,estimate,count,frequency"
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            self.t,
            self.seed,
            self.numerator,
            self.estimate,
            self.count,
            self.frequency
        )
    }

    fn from_csv(line: &str) -> Result<Self, String> {
        let mut p = line.split(',');
        let row = HistogramRow {
            method: field(&mut p, "method")?.to_string(),
            t: parse(field(&mut p, "t")?, "t")?,
            seed: parse(field(&mut p, "seed")?, "seed")?,
            numerator: parse(field(&mut p, "numerator")?, "numerator")?,
            estimate: parse(field(&mut p, "estimate")?, "estimate")?,
            count: parse(field(&mut p, "count")?, "count")?,
            frequency: parse(field(&mut p, "frequency")?, "frequency")?,
        };
        if p.next().is_some() {
            return Err("trailing fields".to_string());
        }
        Ok(row)
    }
}

/// Empirical tail frequency next to its closed-form bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub t: u32,
    pub jaccard_num: u64,
    pub jaccard_den: u64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub tail: String,
    pub empirical: f64,
    pub bound: f64,
}

impl Row for ConcentrationRow {
    fn csv_header() -> &'static str {
        "t,jaccard_num,jaccard_den,delta,trials,seed,tail,empirical,bound"
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.jaccard_num,
            self.jaccard_den,
            self.delta,
            self.trials,
            self.seed,
            self.tail,
            self.empirical,
            self.bound
        )
    }

    fn from_csv(line: &str) -> Result<Self, String> {
        let mut p = line.split(',');
        let row = ConcentrationRow {
            t: parse(field(&mut p, "t")?, "t")?,
            jaccard_num: parse(field(&mut p, "jaccard_num")?, "jaccard_num")?,
            jaccard_den: parse(field(&mut p, "jaccard_den")?, "jaccard_den")?,
            delta: parse(field(&mut p, "delta")?, "delta")?,
            trials: parse(field(&mut p, "trials")?, "trials")?,
            seed: parse(field(&mut p, "seed")?, "seed")?,
            tail: field(&mut p, "tail")?.to_string(),
            empirical: parse(field(&mut p, "empirical")?, "empirical")?,
            bound: parse(field(&mut p, "bound")?, "bound")?,
        };
        if p.next().is_some() {
            return Err("trailing fields".to_string());
        }
        Ok(row)
    }
}

/// Mean construction cost for one `(method, t, |A|)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub t: u32,
    pub size: u64,
    pub trials: u64,
    pub seed: u64,
    pub mean_hash_evals: f64,
    pub mean_elapsed_ns: f64,
}

impl Row for BenchRow {
    fn csv_header() -> &'static str {
        "method,t,size,trials,seed,mean_hash_evals,mean_elapsed_ns"
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            self.t,
            self.size,
            self.trials,
            self.seed,
            self.mean_hash_evals,
            self.mean_elapsed_ns
        )
    }

    fn from_csv(line: &str) -> Result<Self, String> {
        let mut p = line.split(',');
        let row = BenchRow {
            method: field(&mut p, "method")?.to_string(),
            t: parse(field(&mut p, "t")?, "t")?,
            size: parse(field(&mut p, "size")?, "size")?,
            trials: parse(field(&mut p, "trials")?, "trials")?,
            seed: parse(field(&mut p, "seed")?, "seed")?,
            mean_hash_evals: parse(field(&mut p, "mean_hash_evals")?, "mean_hash_evals")?,
            mean_elapsed_ns: parse(field(&mut p, "mean_elapsed_ns")?, "mean_elapsed_ns")?,
        };
        if p.next().is_some() {
            return Err("trailing fields".to_string());
        }
        Ok(row)
    }
}

/// Outcome of one index lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub method: String,
    pub t: u32,
    pub seed: u64,
    pub result: String,
    pub id: String,
    pub exact: Option<f64>,
    pub elapsed_ns: u64,
    pub hash_evals: u64,
    pub pairs_scanned: u64,
    pub separations: u64,
    pub exact_checks: u64,
}

impl Row for QueryRow {
    fn csv_header() -> &'static str {
        "method,t,seed,result,id,exact,elapsed_ns,hash_evals,pairs_scanned,separations,exact_checks"
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.t,
            self.seed,
            self.result,
            self.id,
            opt_f64_to_csv(&self.exact),
            self.elapsed_ns,
            self.hash_evals,
            self.pairs_scanned,
            self.separations,
            self.exact_checks
        )
    }

    fn from_csv(line: &str) -> Result<Self, String> {
        let mut p = line.split(',');
        let row = QueryRow {
            method: field(&mut p, "method")?.to_string(),
            t: parse(field(&mut p, "t")?, "t")?,
            seed: parse(field(&mut p, "seed")?, "seed")?,
            result: field(&mut p, "result")?.to_string(),
            id: field(&mut p, "id")?.to_string(),
            exact: opt_f64_from_csv(field(&mut p, "exact")?, "exact")?,
            elapsed_ns: parse(field(&mut p, "elapsed_ns")?, "elapsed_ns")?,
            hash_evals: parse(field(&mut p, "hash_evals")?, "hash_evals")?,
            pairs_scanned: parse(field(&mut p, "pairs_scanned")?, "pairs_scanned")?,
            separations: parse(field(&mut p, "separations")?, "separations")?,
            exact_checks: parse(field(&mut p, "exact_checks")?, "exact_checks")?,
        };
        if p.next().is_some() {
            return Err("trailing fields".to_string());
        }
        Ok(row)
    }
}

/// Renders rows in the requested format, trailing newline per row. A CSV
/// document always starts with its header, even with no rows.
pub fn render_rows<T: Row + Serialize>(rows: &[T], format: OutFormat) -> String {
    match format {
        OutFormat::Csv => {
            let mut out = String::new();
            out.push_str(T::csv_header());
            out.push('\n');
            for row in rows {
                out.push_str(&row.to_csv());
                out.push('\n');
            }
            out
        }
        OutFormat::Json => {
            let mut out = String::new();
            for row in rows {
                out.push_str(&serde_json::to_string(row).expect("row serialization cannot fail"));
                out.push('\n');
            }
            out
        }
    }
}

/// Parses a CSV document produced by [`render_rows`].
pub fn parse_csv<T: Row>(text: &str) -> Result<Vec<T>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty document")?;
    if header != T::csv_header() {
        return Err(format!("unexpected header {header:?}"));
    }
    lines.map(T::from_csv).collect()
}

/// Parses a JSON-lines document produced by [`render_rows`].
pub fn parse_json_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, String> {
    text.lines()
        .map(|line| serde_json::from_str(line).map_err(|e| e.to_string()))
        .collect()
}
