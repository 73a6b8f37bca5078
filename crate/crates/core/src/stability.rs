//! Sum-stability test for symmetric stable laws.
//!
//! A symmetric law is stable iff `X1 + X2 ~ C1 X` and `X1 + X2 + X3 ~ C2 X`
//! for independent copies. The test splits a sample into pseudo-independent
//! copies, forms the term-wise sums and compares tail-indices of the sums
//! with the tail-index of a held-out copy. Because the estimator is scale
//! invariant, `C1` and `C2` never need estimating.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{header, CsvRecord};
use crate::rng::RngStream;
use crate::tail_index::{choose_block_size, estimate_alpha};

pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Inner block size used by default for every subset.
///
/// The estimator's variance grows like `K1 / (K log^2 K1)`, so a short block
/// keeps the subset estimates tight enough for a 0.05 acceptance level at
/// ~10^5 samples; the square-root rule is available via [`BlockRule`].
pub const DEFAULT_BLOCK_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockRule {
    Fixed(usize),
    /// Divisor of the subset length closest to its square root.
    SqrtDivisor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityTest {
    pub block_rule: BlockRule,
    pub threshold: f64,
}

impl Default for StabilityTest {
    fn default() -> Self {
        StabilityTest {
            block_rule: BlockRule::Fixed(DEFAULT_BLOCK_SIZE),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub alpha_x: f64,
    pub alpha_12: f64,
    pub alpha_xp: f64,
    pub alpha_123: f64,
    pub c_st: f64,
    pub threshold: f64,
}

impl StabilityReport {
    pub fn passes(&self) -> bool {
        is_alpha_stable(self)
    }
}

impl CsvRecord for StabilityReport {
    fn csv_header(&self) -> Vec<String> {
        header(&["alpha_x", "alpha_12", "alpha_xp", "alpha_123", "c_st", "threshold", "pass"])
    }

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.alpha_x.to_string(),
            self.alpha_12.to_string(),
            self.alpha_xp.to_string(),
            self.alpha_123.to_string(),
            self.c_st.to_string(),
            self.threshold.to_string(),
            self.passes().to_string(),
        ]
    }
}

/// Inclusive threshold check.
pub fn is_alpha_stable(report: &StabilityReport) -> bool {
    report.c_st <= report.threshold
}

/// Run the test with default settings.
pub fn stability_condition(samples: &[f64], stream: &RngStream) -> Result<StabilityReport> {
    StabilityTest::default().run(samples, stream)
}

impl StabilityTest {
    /// Smallest sample the test accepts: every quarter must hold at least
    /// three blocks.
    pub fn min_samples(&self) -> usize {
        match self.block_rule {
            BlockRule::Fixed(k1) => 12 * k1,
            BlockRule::SqrtDivisor => 48,
        }
    }

    pub fn run(&self, samples: &[f64], stream: &RngStream) -> Result<StabilityReport> {
        let needed = self.min_samples();
        if samples.len() < needed {
            return Err(Error::InsufficientSamples {
                needed,
                available: samples.len(),
            });
        }
        let mut rng = stream.rng();

        let mut pair = samples.to_vec();
        pair.shuffle(&mut rng);
        let n3 = pair.len() / 3;
        let (x, rest) = pair.split_at(n3);
        let sum12: Vec<f64> = rest[..n3].iter().zip(&rest[n3..2 * n3]).map(|(a, b)| a + b).collect();
        let alpha_x = self.estimate(x)?;
        let alpha_12 = self.estimate(&sum12)?;

        let mut triple = samples.to_vec();
        triple.shuffle(&mut rng);
        let n4 = triple.len() / 4;
        let xp = &triple[..n4];
        let sum123: Vec<f64> = (0..n4)
            .map(|i| triple[n4 + i] + triple[2 * n4 + i] + triple[3 * n4 + i])
            .collect();
        let alpha_xp = self.estimate(xp)?;
        let alpha_123 = self.estimate(&sum123)?;

        Ok(StabilityReport {
            alpha_x,
            alpha_12,
            alpha_xp,
            alpha_123,
            c_st: (alpha_x - alpha_12).abs().max((alpha_xp - alpha_123).abs()),
            threshold: self.threshold,
        })
    }

    fn estimate(&self, subset: &[f64]) -> Result<f64> {
        let k1 = match self.block_rule {
            BlockRule::Fixed(k1) => k1,
            BlockRule::SqrtDivisor => {
                let nonzero = subset.iter().filter(|&&x| x != 0.0).count();
                choose_block_size(nonzero)?.k1
            }
        };
        Ok(estimate_alpha(subset, k1)?.alpha_hat)
    }
}
