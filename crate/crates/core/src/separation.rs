//! Sequential threshold test: decides whether the mean of a stream of
//! values in `[0, 1]` sits above or below a cutoff `gamma`, reading as
//! little of the stream as it can.
//!
//! The test keeps a running sum and, from iteration `r` on, returns `Below`
//! the first time the sum drops to `i * gamma + i^(2/3)` or less. Streams
//! with mean below the cutoff exit after an expected `O(r)` iterations;
//! streams with mean at least `gamma + delta` survive to the end with high
//! probability once `r >= 8 / delta^3`.

use crate::error::{Error, Result};

/// Parameters of the sequential test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationParams {
    /// Stream length.
    pub t: usize,
    /// First iteration at which the below-check fires.
    pub r: usize,
    /// The threshold being tested against.
    pub gamma: f64,
}

impl SeparationParams {
    pub fn new(t: usize, r: usize, gamma: f64) -> Result<Self> {
        if t == 0 || r == 0 || r > t {
            return Err(Error::InvalidParameters(format!(
                "need 1 <= r <= t, got r = {r}, t = {t}"
            )));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameters(format!(
                "gamma = {gamma} outside [0, 1]"
            )));
        }
        Ok(SeparationParams { t, r, gamma })
    }

    /// Whether `r` is large enough for the above-threshold guarantee at gap
    /// `delta`, i.e. `r >= 8 / delta^3`. Smaller gaps still run, they just
    /// lose the high-probability `Above` promise.
    pub fn supports_gap(&self, delta: f64) -> bool {
        delta > 0.0 && self.r as f64 >= 8.0 / (delta * delta * delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Above,
    Below,
}

/// Outcome of the sequential test: the decision plus how many stream values
/// were consumed, so that expected-work claims are testable directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Separation {
    pub decision: Decision,
    pub iterations: usize,
}

/// Runs the sequential test over `values`.
///
/// Ties (`sum == i * gamma + i^(2/3)` exactly) return `Below`. Panics if
/// `values.len() != params.t`.
pub fn separate(values: &[f64], params: &SeparationParams) -> Separation {
    assert_eq!(
        values.len(),
        params.t,
        "stream length {} does not match t = {}",
        values.len(),
        params.t
    );
    let mut sum = 0.0f64;
    for i in 1..=params.t {
        sum += values[i - 1];
        if i >= params.r {
            let threshold = i as f64 * params.gamma + ((i * i) as f64).cbrt();
            if sum <= threshold {
                return Separation {
                    decision: Decision::Below,
                    iterations: i,
                };
            }
        }
    }
    Separation {
        decision: Decision::Above,
        iterations: params.t,
    }
}
