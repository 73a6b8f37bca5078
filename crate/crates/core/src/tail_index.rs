//! Tail-index estimation for symmetric stable samples.
//!
//! The estimator groups `K = K1 * K2` samples into `K2` consecutive blocks of
//! length `K1`, sums each block into `Y_i`, and uses that a block sum of
//! stable variables is the original law scaled by `K1^(1/alpha)`:
//!
//! ```text
//! 1/alpha_hat = ( mean_i log|Y_i| - mean_j log|X_j| ) / log K1
//! ```
//!
//! The scale cancels, so the estimate is exactly scale invariant. Samples
//! are consumed in the order given; blocks depend on that order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{header, CsvRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    /// Raw estimate; not clamped to `(0, 2]`.
    pub alpha_hat: f64,
    pub k1: usize,
    pub k2: usize,
    /// Always `k1 * k2`.
    pub n_used: usize,
    /// Exact zeros, truncation remainder and cancelled blocks.
    pub n_dropped: usize,
}

impl CsvRecord for TailEstimate {
    fn csv_header(&self) -> Vec<String> {
        header(&["alpha_hat", "k1", "k2", "n_used", "n_dropped"])
    }

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.alpha_hat.to_string(),
            self.k1.to_string(),
            self.k2.to_string(),
            self.n_used.to_string(),
            self.n_dropped.to_string(),
        ]
    }
}

/// Estimate the tail-index with inner block size `k1`.
///
/// Exact zeros are removed first. If `k1` does not divide the remaining
/// count the tail is truncated. A block whose sum is exactly zero is dropped
/// together with its members.
pub fn estimate_alpha(samples: &[f64], k1: usize) -> Result<TailEstimate> {
    if k1 < 2 {
        return Err(Error::InvalidParameter(format!("block size k1 must be >= 2, got {k1}")));
    }
    let nonzero: Vec<f64> = samples.iter().copied().filter(|&x| x != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::Degenerate("all samples are zero".into()));
    }
    if nonzero.len() < k1 {
        return Err(Error::InsufficientSamples {
            needed: k1,
            available: nonzero.len(),
        });
    }
    if let Some(bad) = nonzero.iter().find(|x| !x.is_finite()) {
        return Err(Error::Degenerate(format!("non-finite sample {bad}")));
    }

    let mut sum_log_y = 0.0;
    let mut sum_log_x = 0.0;
    let mut k2 = 0usize;
    for block in nonzero.chunks_exact(k1) {
        let y: f64 = block.iter().sum();
        if y == 0.0 {
            continue;
        }
        sum_log_y += y.abs().ln();
        sum_log_x += block.iter().map(|x| x.abs().ln()).sum::<f64>();
        k2 += 1;
    }
    if k2 == 0 {
        return Err(Error::Degenerate("every block sum cancelled to zero".into()));
    }
    let n_used = k1 * k2;
    let growth = sum_log_y / k2 as f64 - sum_log_x / n_used as f64;
    if !(growth > 0.0) {
        return Err(Error::Degenerate(format!(
            "block sums do not grow (mean log-ratio {growth}); samples are not heavy- or light-tailed noise"
        )));
    }
    Ok(TailEstimate {
        alpha_hat: (k1 as f64).ln() / growth,
        k1,
        k2,
        n_used,
        n_dropped: samples.len() - n_used,
    })
}

/// Block size chosen for a pool of `k` samples, together with the pool
/// length actually used (`k_used <= k`, divisible by `k1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockChoice {
    pub k1: usize,
    pub k_used: usize,
}

/// Divisor of `k` closest to `sqrt(k)`, ties toward the smaller divisor.
///
/// The divisor must lie in `[sqrt(k)/2, 2 sqrt(k)]`; when none does (prime or
/// otherwise awkward `k`) the pool is shortened one sample at a time until
/// one does.
pub fn choose_block_size(k: usize) -> Result<BlockChoice> {
    if k < 4 {
        return Err(Error::InsufficientSamples { needed: 4, available: k });
    }
    let mut len = k;
    loop {
        if let Some(k1) = closest_divisor(len) {
            return Ok(BlockChoice { k1, k_used: len });
        }
        len -= 1;
    }
}

fn closest_divisor(k: usize) -> Option<usize> {
    let root = (k as f64).sqrt();
    let mut best: Option<usize> = None;
    let mut consider = |d: usize| {
        let in_window = (d as f64) >= root / 2.0 && (d as f64) <= 2.0 * root && d >= 2;
        if !in_window {
            return;
        }
        best = match best {
            None => Some(d),
            Some(b) => {
                let (db, dd) = ((b as f64 - root).abs(), (d as f64 - root).abs());
                if dd < db || (dd == db && d < b) {
                    Some(d)
                } else {
                    Some(b)
                }
            }
        };
    };
    let mut i = 1usize;
    while i * i <= k {
        if k.is_multiple_of(i) {
            consider(i);
            consider(k / i);
        }
        i += 1;
    }
    best
}

/// Estimate with the block size picked by [`choose_block_size`] on the
/// non-zero part of the pool.
pub fn estimate_alpha_auto(samples: &[f64]) -> Result<TailEstimate> {
    let nonzero = samples.iter().filter(|&&x| x != 0.0).count();
    if nonzero == 0 {
        return Err(Error::Degenerate("all samples are zero".into()));
    }
    let choice = choose_block_size(nonzero)?;
    estimate_alpha(samples, choice.k1)
}

/// Tail-index of minibatch gradient noise at a fixed iterate.
///
/// Forms `U_i = g_i - g_full` for every minibatch gradient, concatenates the
/// noise vectors in minibatch order and estimates on the pooled sample.
pub fn gradient_noise_alpha(grad_full: &[f64], grads_minibatch: &[Vec<f64>]) -> Result<TailEstimate> {
    if grads_minibatch.is_empty() {
        return Err(Error::InvalidParameter("no minibatch gradients".into()));
    }
    let d = grad_full.len();
    let mut pool = Vec::with_capacity(d * grads_minibatch.len());
    for g in grads_minibatch {
        if g.len() != d {
            return Err(Error::Shape { expected: d, actual: g.len() });
        }
        pool.extend(g.iter().zip(grad_full).map(|(a, b)| a - b));
    }
    estimate_alpha_auto(&pool)
}
