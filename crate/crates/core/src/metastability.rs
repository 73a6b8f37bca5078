//! Small-noise predictions for the scalar Levy-driven gradient flow
//! `dw = -f'(w) dt + eps dL`.
//!
//! In the limit `eps -> 0`, time-rescaled by `eps^-alpha`, the process hops
//! between the local minima as a continuous-time Markov chain whose rates only
//! depend on the distances from each minimum to the surrounding saddles:
//!
//! ```text
//! q_ij = (1/alpha) | |s_{j-1} - m_i|^-alpha - |s_j - m_i|^-alpha |
//! ```
//!
//! with `s_0 = -inf`, `s_r = +inf` contributing zero. The rates and exit
//! laws below are for a Levy motion whose jump measure has unit density
//! `|y|^(-1-alpha) dy`; see [`crate::stable::levy_density_constant`] for the
//! factor relating this to `SaS(1)` increments.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::BasinGeometry;
use crate::stable::validate_alpha;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChainModel {
    pub minima: Vec<f64>,
    pub saddles: Vec<f64>,
    pub alpha: f64,
    /// Generator, row-major `r x r`.
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    /// Stationary law, once solved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

impl MarkovChainModel {
    pub fn states(&self) -> usize {
        self.minima.len()
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.states() + j]
    }

    /// Total escape rate `q_i` out of valley `i`.
    pub fn escape_rate(&self, i: usize) -> f64 {
        -self.rate(i, i)
    }

    /// Solve for the stationary law and store it.
    pub fn with_stationary(mut self) -> Result<Self> {
        self.pi = Some(stationary_distribution(&self)?);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }
}

/// `1/|s - m|^alpha`, zero for the implicit infinite saddles.
fn inverse_power(saddle: Option<f64>, m: f64, alpha: f64) -> f64 {
    match saddle {
        None => 0.0,
        Some(s) => 1.0 / (s - m).abs().powf(alpha),
    }
}

/// Build the valley-hopping generator from interleaved minima and saddles.
pub fn generator_matrix(minima: &[f64], saddles: &[f64], alpha: f64) -> Result<MarkovChainModel> {
    validate_alpha(alpha)?;
    let geom = BasinGeometry::new(minima.to_vec(), saddles.to_vec())?;
    let r = geom.len();
    // Saddle s_j for j in 0..=r, with the two ends at infinity.
    let saddle = |j: usize| -> Option<f64> {
        if j == 0 || j == r {
            None
        } else {
            Some(geom.saddles[j - 1])
        }
    };
    let mut q = vec![0.0; r * r];
    for i in 0..r {
        let m = geom.minima[i];
        let mut row_sum = 0.0;
        for j in 0..r {
            if i == j {
                continue;
            }
            // Valley j spans (s_j, s_{j+1}) in 0-based saddle numbering.
            let rate = (inverse_power(saddle(j), m, alpha) - inverse_power(saddle(j + 1), m, alpha)).abs() / alpha;
            q[i * r + j] = rate;
            row_sum += rate;
        }
        q[i * r + i] = -row_sum;
    }
    Ok(MarkovChainModel {
        minima: geom.minima,
        saddles: geom.saddles,
        alpha,
        q,
        pi: None,
    })
}

/// Stationary law `pi` with `Q^T pi = 0`, `sum pi = 1`.
///
/// The last balance equation is replaced by the normalisation, which makes
/// the system square and nonsingular for an irreducible chain.
pub fn stationary_distribution(model: &MarkovChainModel) -> Result<Vec<f64>> {
    let r = model.states();
    if r == 1 {
        return Ok(vec![1.0]);
    }
    let mut a = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            a[(i, j)] = model.rate(j, i);
        }
    }
    for j in 0..r {
        a[(r - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(r);
    rhs[r - 1] = 1.0;

    let lu = a.clone().lu();
    let pi = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("generator has more than one null direction".into()))?;
    let scale = a.amax().max(1.0);
    if pi.iter().any(|p| !p.is_finite() || *p < -1e-12 * scale) {
        return Err(Error::Degenerate(format!("stationary solve produced an invalid law {pi:?}")));
    }
    let pi: Vec<f64> = pi.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|p| p / total).collect())
}

/// Closed form for two wells separated by a saddle at zero:
/// `pi_i = |m_i|^alpha / (|m_1|^alpha + |m_2|^alpha)`.
pub fn two_well_stationary(m1: f64, m2: f64, alpha: f64) -> [f64; 2] {
    let a = m1.abs().powf(alpha);
    let b = m2.abs().powf(alpha);
    [a / (a + b), b / (a + b)]
}

/// Leading-order mean first exit time from `[-a, a]` around a minimum:
/// `(alpha/2) a^alpha / eps^alpha`.
pub fn expected_exit_time(a: f64, epsilon: f64, alpha: f64) -> f64 {
    assert!(a > 0.0 && epsilon > 0.0, "a and epsilon must be positive");
    assert!(alpha > 0.0 && alpha <= 2.0, "alpha must lie in (0, 2]");
    0.5 * alpha * (a / epsilon).powf(alpha)
}

/// Leading-order survival `P(tau > u) = exp(-u eps^alpha theta / alpha)`
/// with `theta = 2 / a^alpha`.
pub fn exit_survival(u: f64, a: f64, epsilon: f64, alpha: f64) -> f64 {
    assert!(u >= 0.0, "u must be non-negative");
    (-u / expected_exit_time(a, epsilon, alpha)).exp()
}

/// Rate `theta / alpha = 2 / (alpha a^alpha)` of the exponential law of
/// `eps^alpha tau`.
pub fn scaled_exit_rate(a: f64, alpha: f64) -> f64 {
    2.0 / (alpha * a.powf(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_well_plug_in() {
        let m = generator_matrix(&[-1.0, 2.0], &[0.0], 1.0).unwrap();
        assert!((m.rate(0, 1) - 1.0).abs() < 1e-12);
        assert!((m.rate(1, 0) - 0.5).abs() < 1e-12);
        let pi = stationary_distribution(&m).unwrap();
        assert!((pi[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((pi[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_wells() {
        let m = generator_matrix(&[-1.0, 1.0], &[0.0], 1.3).unwrap();
        assert_eq!(m.rate(0, 1), m.rate(1, 0));
        let pi = stationary_distribution(&m).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ordering() {
        assert!(generator_matrix(&[-1.0, 2.0], &[3.0], 1.0).is_err());
        assert!(generator_matrix(&[-1.0, 2.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn exit_time_plug_ins() {
        assert!((expected_exit_time(1.0, 0.1, 1.0) - 5.0).abs() < 1e-12);
        assert!((expected_exit_time(1.0, 1.0, 2.0) - 1.0).abs() < 1e-15);
        let expected = 0.75 * 2f64.powf(1.5) * 10f64.powf(1.5);
        assert!((expected_exit_time(2.0, 0.1, 1.5) - expected).abs() < 1e-9);
        assert!((expected - 67.08).abs() < 0.01);
    }

    #[test]
    fn survival_plug_ins() {
        assert_eq!(exit_survival(0.0, 1.0, 0.1, 1.0), 1.0);
        let e = (-1.0f64).exp();
        assert!((exit_survival(5.0, 1.0, 0.1, 1.0) - e).abs() < 1e-12);
        let mean = expected_exit_time(1.7, 0.03, 1.4);
        assert!((exit_survival(mean, 1.7, 0.03, 1.4) - e).abs() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let m = generator_matrix(&[-1.0, 2.0], &[0.0], 1.0).unwrap().with_stationary().unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["Q"].as_array().unwrap().len(), 4);
        assert_eq!(v["pi"].as_array().unwrap().len(), 2);
        assert_eq!(v["minima"][1], 2.0);
    }
}
