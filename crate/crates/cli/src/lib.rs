//! Library half of the CLI: input parsing and report rendering, split out
//! so integration tests can parse what the binary emits.

pub mod data;
pub mod report;
