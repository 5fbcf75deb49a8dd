//! Wall-clock timing helpers for runtime reporting and latency checks.
//!
//! These are coarse, repetition-with-median measurements intended for
//! human-readable runtime tables and latency budget assertions, not for
//! micro-benchmarking.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of repetitions for [`time_stats`].
pub const DEFAULT_TIMING_REPS: usize = 5;

/// Repetition count and microsecond summary of one timed operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub reps: usize,
    pub median_us: f64,
    pub min_us: f64,
    pub max_us: f64,
}

impl TimingStats {
    pub fn median_ms(&self) -> f64 {
        self.median_us / 1e3
    }
}

/// Median of a set of durations; even counts average the two middle values.
pub fn median_duration(mut samples: Vec<Duration>) -> Result<Duration> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("timing samples".into()));
    }
    samples.sort_unstable();
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        Ok(samples[mid])
    } else {
        Ok((samples[mid - 1] + samples[mid]) / 2)
    }
}

/// Runs `f` `reps` times (at least 3) and reports median/min/max wall time.
pub fn time_stats<F: FnMut()>(reps: usize, mut f: F) -> Result<TimingStats> {
    if reps < 3 {
        return Err(Error::InvalidParameter(format!(
            "timing reps must be >= 3 for a meaningful median, got {reps}"
        )));
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        f();
        samples.push(start.elapsed());
    }
    let median = median_duration(samples.clone())?;
    let min = samples.iter().min().expect("non-empty");
    let max = samples.iter().max().expect("non-empty");
    Ok(TimingStats {
        reps,
        median_us: median.as_secs_f64() * 1e6,
        min_us: min.as_secs_f64() * 1e6,
        max_us: max.as_secs_f64() * 1e6,
    })
}
