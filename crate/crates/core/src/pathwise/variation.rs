use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// p-variation over partitions built from sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationResult {
    pub p: f64,
    pub value: f64,
    /// Indices of a maximizing partition, first and last sample included.
    pub partition: Vec<usize>,
}

/// `(sup Σ |f_{i_k} − f_{i_{k−1}}|^p)^{1/p}` over all subsequences of the
/// samples that keep both endpoints.
///
/// Only sample points may serve as partition points, so on a discretized
/// path this is a lower bound for the continuum quantity. O(n²).
pub fn p_variation(f: &[f64], p: f64) -> Result<VariationResult> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("must be a finite number >= 1, got {p}")));
    }
    if f.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = f.len();
    let mut best = vec![0.0; n];
    let mut from = vec![0usize; n];
    for j in 1..n {
        let (mut b, mut arg) = (f64::NEG_INFINITY, 0);
        for i in 0..j {
            let cand = best[i] + (f[j] - f[i]).abs().powf(p);
            if cand > b {
                b = cand;
                arg = i;
            }
        }
        best[j] = b;
        from[j] = arg;
    }
    let mut partition = vec![n - 1];
    let mut k = n - 1;
    while k > 0 {
        k = from[k];
        partition.push(k);
    }
    partition.reverse();
    Ok(VariationResult {
        p,
        value: best[n - 1].powf(1.0 / p),
        partition,
    })
}

/// `max_{s≠t} |f(t) − f(s)| / |t − s|^α` over grid pairs.
pub fn holder_seminorm(times: &[f64], f: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    if times.len() != f.len() {
        return Err(Error::GridMismatch(format!("{} times but {} values", times.len(), f.len())));
    }
    if f.len() < 2 {
        return Err(Error::invalid("path", "need at least two points"));
    }
    let mut worst: f64 = 0.0;
    for j in 1..f.len() {
        for i in 0..j {
            worst = worst.max((f[j] - f[i]).abs() / (times[j] - times[i]).abs().powf(alpha));
        }
    }
    Ok(worst)
}
