//! Parameter sweeps: axis generation and an order-preserving map over sweep
//! points that runs on the rayon pool or sequentially.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// How sweep points are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over sweep points. Falls back to sequential when the
    /// crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Applies `f` to every item; results keep the order of `items`.
pub fn map_points<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Like [`map_points`] but stops at the first error in sweep order.
pub fn try_map_points<T, R, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    map_points(items, exec, f).into_iter().collect()
}

/// Runs `op` on a dedicated pool of `threads` workers (0 = rayon default).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(op))
}

/// Without the `parallel` feature the thread count is ignored.
#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, op: impl FnOnce() -> R + Send) -> Result<R> {
    Ok(op())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(invalid(format!("unknown spacing '{other}' (expected linear or log)"))),
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        })
    }
}

/// `count` values from `min` to `max` inclusive.
pub fn axis(min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("sweep needs at least one point"));
    }
    if !(min.is_finite() && max.is_finite()) || min > max {
        return Err(invalid(format!("sweep range [{min}, {max}] is invalid")));
    }
    if spacing == Spacing::Log && !(min > 0.0) {
        return Err(invalid("log sweep needs a positive lower bound"));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let t = |i: usize| i as f64 / (count - 1) as f64;
    let mut v: Vec<f64> = match spacing {
        Spacing::Linear => (0..count).map(|i| min + (max - min) * t(i)).collect(),
        Spacing::Log => {
            let (a, b) = (min.ln(), max.ln());
            (0..count).map(|i| (a + (b - a) * t(i)).exp()).collect()
        }
    };
    v[0] = min;
    v[count - 1] = max;
    Ok(v)
}
