//! Command-line surface: sketch collections, reproduce estimation
//! experiments, benchmark construction cost, and build/query an LSH index.
//!
//! Every command is deterministic given `--seed`; commands that repeat an
//! experiment derive trial `i`'s seed as `seed + i`, so any single trial
//! can be reproduced in isolation.
//!
//! Exit codes: 0 success (or query found), 1 query not found, 2 usage
//! error, 3 data error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use simsketch::baselines::{densify_optimal, densify_rotation, minhash_sketch, oph_sketch};
use simsketch::lsh::LshIndex;
use simsketch::{
    dot_estimate, estimate_jaccard, featurize_bbit, fill_sketch, fill_sketch_with_stats, ElementId,
    Error, SketchHasher,
};
use simsketch_cli::data::{parse_collection, parse_query_line};
use simsketch_cli::report::{
    render_rows, BenchRow, ConcentrationRow, HistogramRow, OutFormat, QueryRow,
};

#[derive(Parser)]
#[command(
    name = "simsketch",
    version,
    about = "Similarity sketching and approximate Jaccard search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sketch every set in a collection file into one binary file per set.
    Sketch {
        /// Collection file: one `<id>\t<token> <token> ...` line per set.
        #[arg(long)]
        input: PathBuf,
        /// Sketch length.
        #[arg(long, default_value_t = 16)]
        t: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; one `<id>.fsk` file per set.
        #[arg(long)]
        out: PathBuf,
        /// Treat tokens as decimal 64-bit integers instead of hashing them.
        #[arg(long)]
        numeric: bool,
    },
    /// Estimate-frequency table for A = {1,2}, B = {2,3} across methods.
    Histogram {
        #[arg(long, default_value_t = 16)]
        t: u32,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Additionally estimate via b-bit features of the fast sketch.
        #[arg(long)]
        b: Option<u32>,
        #[arg(long, default_value = "csv")]
        format: OutFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical tail frequencies next to their closed-form bounds.
    Concentration {
        #[arg(long, default_value_t = 16)]
        t: u32,
        /// Exact Jaccard similarity as a fraction, e.g. 1/3.
        #[arg(long, default_value = "1/3")]
        jaccard: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "csv")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean hash evaluations and wall time, fast sketch vs MinHash.
    Bench {
        /// Comma-separated set sizes.
        #[arg(long, default_value = "1,10,1000,100000")]
        sizes: String,
        /// Comma-separated sketch lengths.
        #[arg(long = "t-list", default_value = "16,256")]
        t_list: String,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "csv")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a similarity-search index over a collection file.
    LshBuild {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        j1: f64,
        #[arg(long)]
        j2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Index file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        numeric: bool,
    },
    /// Query a built index; prints one result row.
    LshQuery {
        #[arg(long)]
        index: PathBuf,
        /// Query tokens, whitespace separated.
        #[arg(long, conflicts_with = "query_file")]
        query: Option<String>,
        /// File whose first line is the query (an optional leading
        /// `<id>\t` is ignored).
        #[arg(long)]
        query_file: Option<PathBuf>,
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value = "csv")]
        format: OutFormat,
    },
}

enum CmdError {
    Usage(String),
    Data(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameters(_) => CmdError::Usage(e.to_string()),
            _ => CmdError::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CmdError> {
    match command {
        Command::Sketch {
            input,
            t,
            seed,
            out,
            numeric,
        } => cmd_sketch(&input, t, seed, &out, numeric),
        Command::Histogram {
            t,
            trials,
            seed,
            b,
            format,
            out,
        } => cmd_histogram(t, trials, seed, b, format, out.as_deref()),
        Command::Concentration {
            t,
            jaccard,
            delta,
            trials,
            seed,
            format,
            out,
        } => cmd_concentration(t, &jaccard, delta, trials, seed, format, out.as_deref()),
        Command::Bench {
            sizes,
            t_list,
            trials,
            seed,
            format,
            out,
        } => cmd_bench(&sizes, &t_list, trials, seed, format, out.as_deref()),
        Command::LshBuild {
            input,
            j1,
            j2,
            seed,
            out,
            numeric,
        } => cmd_lsh_build(&input, j1, j2, seed, &out, numeric),
        Command::LshQuery {
            index,
            query,
            query_file,
            numeric,
            format,
        } => cmd_lsh_query(
            &index,
            query.as_deref(),
            query_file.as_deref(),
            numeric,
            format,
        ),
    }
}

fn read_file(path: &Path) -> Result<String, CmdError> {
    fs::read_to_string(path).map_err(|e| CmdError::Data(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CmdError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CmdError::Data(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// File names are derived from set ids; anything outside a conservative
/// character set is replaced to keep paths portable.
fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_sketch(
    input: &Path,
    t: u32,
    seed: u64,
    out: &Path,
    numeric: bool,
) -> Result<ExitCode, CmdError> {
    let text = read_file(input)?;
    let collection = parse_collection(&text, numeric, seed).map_err(CmdError::Data)?;
    fs::create_dir_all(out).map_err(|e| CmdError::Data(format!("{}: {e}", out.display())))?;
    let hasher = SketchHasher::new(seed);
    for (id, set) in &collection {
        let sketch = fill_sketch(set, t, &hasher)?;
        let path = out.join(format!("{}.fsk", sanitize_id(id)));
        let mut buf = Vec::new();
        sketch.write_to(&mut buf)?;
        fs::write(&path, buf).map_err(|e| CmdError::Data(format!("{}: {e}", path.display())))?;
        println!("{id}\t{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_histogram(
    t: u32,
    trials: u64,
    seed: u64,
    b: Option<u32>,
    format: OutFormat,
    out: Option<&Path>,
) -> Result<ExitCode, CmdError> {
    if t == 0 {
        return Err(CmdError::Usage("t must be at least 1".into()));
    }
    if let Some(bits) = b {
        if !(1..=16).contains(&bits) {
            return Err(CmdError::Usage(format!("b = {bits} outside 1..=16")));
        }
    }
    let a = [ElementId(1), ElementId(2)];
    let bset = [ElementId(2), ElementId(3)];
    let mut methods: Vec<String> = ["fillsketch", "minhash", "oph-rotation", "oph-optimal"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(bits) = b {
        methods.push(format!("bbit{bits}"));
    }
    let mut counts: Vec<Vec<u64>> = vec![vec![0; t as usize + 1]; methods.len()];
    for trial in 0..trials {
        let h = SketchHasher::new(seed + trial);
        let sa = fill_sketch(&a, t, &h)?;
        let sb = fill_sketch(&bset, t, &h)?;
        let numerator = |est: f64| (est * t as f64).round() as usize;
        counts[0][numerator(estimate_jaccard(&sa, &sb)?)] += 1;
        let ma = minhash_sketch(&a, t, &h)?;
        let mb = minhash_sketch(&bset, t, &h)?;
        counts[1][numerator(ma.estimate_jaccard(&mb)?)] += 1;
        let oa = oph_sketch(&a, t, &h)?;
        let ob = oph_sketch(&bset, t, &h)?;
        let rot = densify_rotation(&oa)?.estimate_jaccard(&densify_rotation(&ob)?)?;
        counts[2][numerator(rot)] += 1;
        let opt = densify_optimal(&oa)?.estimate_jaccard(&densify_optimal(&ob)?)?;
        counts[3][numerator(opt)] += 1;
        if let Some(bits) = b {
            let dot = dot_estimate(&featurize_bbit(&sa, bits), &featurize_bbit(&sb, bits))?;
            counts[4][dot as usize] += 1;
        }
    }
    let mut rows = Vec::new();
    for (m, method) in methods.iter().enumerate() {
        for numerator in 0..=t {
            let count = counts[m][numerator as usize];
            rows.push(HistogramRow {
                method: method.clone(),
                t,
                seed,
                numerator,
                estimate: numerator as f64 / t as f64,
                count,
                frequency: if trials == 0 {
                    0.0
                } else {
                    count as f64 / trials as f64
                },
            });
        }
    }
    emit(&render_rows(&rows, format), out)?;
    Ok(ExitCode::SUCCESS)
}

/// Parses "num/den" into a reduced-feasibility-checked fraction.
fn parse_fraction(raw: &str) -> Result<(u64, u64), CmdError> {
    let (num, den) = raw
        .split_once('/')
        .ok_or_else(|| CmdError::Usage(format!("jaccard {raw:?} is not of the form num/den")))?;
    let num: u64 = num
        .trim()
        .parse()
        .map_err(|_| CmdError::Usage(format!("bad numerator in {raw:?}")))?;
    let den: u64 = den
        .trim()
        .parse()
        .map_err(|_| CmdError::Usage(format!("bad denominator in {raw:?}")))?;
    if den == 0 || num > den {
        return Err(CmdError::Usage(format!(
            "jaccard {raw:?} is not a fraction in [0, 1]"
        )));
    }
    Ok((num, den))
}

/// Builds two sets with exact Jaccard `num/den`: a shared core of `num`
/// elements plus disjoint tails splitting the remaining `den - num`.
fn sets_with_jaccard(num: u64, den: u64) -> Result<(Vec<ElementId>, Vec<ElementId>), CmdError> {
    let tail = den - num;
    let extra_a = tail.div_ceil(2);
    let extra_b = tail / 2;
    if num + extra_a == 0 || num + extra_b == 0 {
        return Err(CmdError::Usage(format!(
            "jaccard {num}/{den} is infeasible: one of the constructed sets would be empty"
        )));
    }
    let mut a: Vec<ElementId> = (0..num).map(ElementId).collect();
    let mut b = a.clone();
    a.extend((0..extra_a).map(|i| ElementId(1_000_000 + i)));
    b.extend((0..extra_b).map(|i| ElementId(2_000_000 + i)));
    Ok((a, b))
}

fn chernoff_upper_bound(delta: f64, t: u32) -> f64 {
    (delta.exp() / (1.0 + delta).powf(1.0 + delta)).powi(t as i32)
}

fn chernoff_lower_bound(delta: f64, t: u32) -> f64 {
    if delta > 1.0 {
        // The lower-tail event is empty below zero; anything dominates it.
        0.0
    } else if (delta - 1.0).abs() < 1e-12 {
        (-(t as f64)).exp()
    } else {
        ((-delta).exp() / (1.0 - delta).powf(1.0 - delta)).powi(t as i32)
    }
}

fn cmd_concentration(
    t: u32,
    jaccard: &str,
    delta: f64,
    trials: u64,
    seed: u64,
    format: OutFormat,
    out: Option<&Path>,
) -> Result<ExitCode, CmdError> {
    if t == 0 {
        return Err(CmdError::Usage("t must be at least 1".into()));
    }
    if delta <= 0.0 || !delta.is_finite() {
        return Err(CmdError::Usage(format!("delta = {delta} must be positive")));
    }
    let (num, den) = parse_fraction(jaccard)?;
    let (a, b) = sets_with_jaccard(num, den)?;
    let j = num as f64 / den as f64;
    let mut upper = 0u64;
    let mut lower = 0u64;
    for trial in 0..trials {
        let h = SketchHasher::new(seed + trial);
        let sa = fill_sketch(&a, t, &h)?;
        let sb = fill_sketch(&b, t, &h)?;
        let x = (estimate_jaccard(&sa, &sb)? * t as f64).round();
        if x >= t as f64 * j * (1.0 + delta) - 1e-9 {
            upper += 1;
        }
        if x <= t as f64 * j * (1.0 - delta) + 1e-9 {
            lower += 1;
        }
    }
    let freq = |c: u64| {
        if trials == 0 {
            0.0
        } else {
            c as f64 / trials as f64
        }
    };
    let rows = if trials == 0 {
        Vec::new()
    } else {
        vec![
            ConcentrationRow {
                t,
                jaccard_num: num,
                jaccard_den: den,
                delta,
                trials,
                seed,
                tail: "upper".into(),
                empirical: freq(upper),
                bound: chernoff_upper_bound(delta, t),
            },
            ConcentrationRow {
                t,
                jaccard_num: num,
                jaccard_den: den,
                delta,
                trials,
                seed,
                tail: "lower".into(),
                empirical: freq(lower),
                bound: chernoff_lower_bound(delta, t),
            },
        ]
    };
    emit(&render_rows(&rows, format), out)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CmdError> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|_| CmdError::Usage(format!("bad {what} entry {part:?}")))
        })
        .collect()
}

fn cmd_bench(
    sizes: &str,
    t_list: &str,
    trials: u64,
    seed: u64,
    format: OutFormat,
    out: Option<&Path>,
) -> Result<ExitCode, CmdError> {
    let sizes: Vec<u64> = parse_list(sizes, "size")?;
    let ts: Vec<u32> = parse_list(t_list, "t")?;
    if trials == 0 {
        return Err(CmdError::Usage("trials must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &size in &sizes {
        if size == 0 {
            return Err(CmdError::Usage("set size must be at least 1".into()));
        }
        let set: Vec<ElementId> = (0..size).map(ElementId).collect();
        for &t in &ts {
            let mut fill_evals = 0u64;
            let mut fill_ns = 0u128;
            let mut mh_evals = 0u64;
            let mut mh_ns = 0u128;
            for trial in 0..trials {
                let h = SketchHasher::new(seed + trial);
                let start = Instant::now();
                let (_, stats) = fill_sketch_with_stats(&set, t, &h)?;
                fill_ns += start.elapsed().as_nanos();
                fill_evals += stats.hash_evals;
                let start = Instant::now();
                let _ = minhash_sketch(&set, t, &h)?;
                mh_ns += start.elapsed().as_nanos();
                // MinHash evaluates every (row, element) pair exactly once.
                mh_evals += t as u64 * size;
            }
            let n = trials as f64;
            rows.push(BenchRow {
                method: "fillsketch".into(),
                t,
                size,
                trials,
                seed,
                mean_hash_evals: fill_evals as f64 / n,
                mean_elapsed_ns: fill_ns as f64 / n,
            });
            rows.push(BenchRow {
                method: "minhash".into(),
                t,
                size,
                trials,
                seed,
                mean_hash_evals: mh_evals as f64 / n,
                mean_elapsed_ns: mh_ns as f64 / n,
            });
        }
    }
    emit(&render_rows(&rows, format), out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_lsh_build(
    input: &Path,
    j1: f64,
    j2: f64,
    seed: u64,
    out: &Path,
    numeric: bool,
) -> Result<ExitCode, CmdError> {
    let text = read_file(input)?;
    let collection = parse_collection(&text, numeric, seed).map_err(CmdError::Data)?;
    let index = LshIndex::build(&collection, j1, j2, seed)?;
    let p = index.params();
    eprintln!(
        "indexed {} sets: K = {}, L = {}, t = {}, t_sep = {}, rho = {:.4}, gamma = {:.4}",
        index.len(),
        p.sig_len,
        p.num_tables,
        p.sketch_len,
        p.sep_len,
        p.rho,
        p.gamma
    );
    if !p.separation_guaranteed() {
        eprintln!(
            "note: threshold gap {:.4} is below the sequential test's guarantee range \
             (needs r >= 8/gap^3 = {:.0}, have r = {}); screening keeps its exact final \
             gate but may discard more true neighbors",
            p.separation_gap(),
            8.0 / p.separation_gap().powi(3),
            p.sep_r
        );
    }
    let mut buf = Vec::new();
    index.write_to(&mut buf)?;
    fs::write(out, buf).map_err(|e| CmdError::Data(format!("{}: {e}", out.display())))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_lsh_query(
    index_path: &Path,
    query: Option<&str>,
    query_file: Option<&Path>,
    numeric: bool,
    format: OutFormat,
) -> Result<ExitCode, CmdError> {
    let bytes = fs::read(index_path)
        .map_err(|e| CmdError::Data(format!("{}: {e}", index_path.display())))?;
    let index = LshIndex::read_from(&bytes[..])?;
    let line = match (query, query_file) {
        (Some(q), _) => q.to_string(),
        (None, Some(path)) => read_file(path)?
            .lines()
            .next()
            .unwrap_or_default()
            .to_string(),
        (None, None) => {
            return Err(CmdError::Usage(
                "provide a query via --query or --query-file".into(),
            ))
        }
    };
    let elements = parse_query_line(&line, numeric, index.seed()).map_err(CmdError::Data)?;
    let start = Instant::now();
    let (found, stats) = index.query_with_stats(&elements)?;
    let elapsed_ns = start.elapsed().as_nanos() as u64;
    let row = QueryRow {
        method: "lsh".into(),
        t: index.params().sketch_len,
        seed: index.seed(),
        result: if found.is_some() {
            "found"
        } else {
            "not_found"
        }
        .into(),
        id: found.as_ref().map(|m| m.id.clone()).unwrap_or_default(),
        exact: found.as_ref().map(|m| m.jaccard),
        elapsed_ns,
        hash_evals: stats.hash_evals,
        pairs_scanned: stats.pairs_scanned,
        separations: stats.separations,
        exact_checks: stats.exact_checks,
    };
    print!("{}", render_rows(&[row], format));
    Ok(if found.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
