//! Collection-file parsing.
//!
//! One set per line: `<set-id><TAB><token> <token> ...`. Tokens are either
//! decimal 64-bit integers (`numeric = true`) or arbitrary strings mapped
//! into the element universe by the seeded tokenizer. Errors carry
//! 1-based line numbers.

use std::collections::BTreeSet;

use simsketch::hashing::tokenize;
use simsketch::ElementId;

/// Parses a whole collection file. Set ids must be unique and every line
/// must carry at least one token.
pub fn parse_collection(
    text: &str,
    numeric: bool,
    seed: u64,
) -> Result<Vec<(String, Vec<ElementId>)>, String> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            return Err(format!("line {lineno}: empty set"));
        }
        let (id, tokens) = line
            .split_once('\t')
            .ok_or_else(|| format!("line {lineno}: missing TAB between set id and tokens"))?;
        if id.is_empty() {
            return Err(format!("line {lineno}: empty set id"));
        }
        if !seen.insert(id.to_string()) {
            return Err(format!("line {lineno}: duplicate set id {id:?}"));
        }
        let elements =
            parse_tokens(tokens, numeric, seed).map_err(|e| format!("line {lineno}: {e}"))?;
        out.push((id.to_string(), elements));
    }
    Ok(out)
}

/// Parses one whitespace-separated token list into a sorted, deduplicated
/// element set.
pub fn parse_tokens(tokens: &str, numeric: bool, seed: u64) -> Result<Vec<ElementId>, String> {
    let mut set = BTreeSet::new();
    for tok in tokens.split_whitespace() {
        let id = if numeric {
            ElementId(
                tok.parse::<u64>()
                    .map_err(|_| format!("token {tok:?} is not a 64-bit unsigned integer"))?,
            )
        } else {
            tokenize(tok.as_bytes(), seed)
        };
        set.insert(id);
    }
    if set.is_empty() {
        return Err("empty set".to_string());
    }
    Ok(set.into_iter().collect())
}

/// Parses a query line: either bare tokens or a full collection line whose
/// id (everything before the first TAB) is ignored.
pub fn parse_query_line(line: &str, numeric: bool, seed: u64) -> Result<Vec<ElementId>, String> {
    let tokens = match line.split_once('\t') {
        Some((_, rest)) => rest,
        None => line,
    };
    parse_tokens(tokens, numeric, seed)
}
