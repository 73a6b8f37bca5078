//! Symmetric alpha-stable (SaS) laws.
//!
//! `X ~ SaS(sigma)` has characteristic function `E exp(i w X) = exp(-|sigma w|^alpha)`.
//! At `alpha = 2` this is the Gaussian `N(0, 2 sigma^2)`, at `alpha = 1` the
//! Cauchy law with scale `sigma`.
//!
//! Sampling uses the Chambers-Mallows-Stuck transform of a uniform angle and
//! a unit exponential, which is exact for every `alpha` in `(0, 2]`. Draws are
//! never truncated; for small `alpha` the result may overflow to infinity and
//! consumers are expected to treat that explicitly.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl StableParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma", sigma, "sigma > 0"));
        }
        Ok(StableParams { alpha, sigma })
    }

    /// Unit-scale law `SaS(1)`.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::domain("alpha", alpha, "0 < alpha <= 2"))
    }
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Gaussian,
    Cauchy,
    General {
        /// `(1 - alpha) / alpha`
        outer: f64,
        inv_alpha: f64,
    },
}

/// Sampler for `SaS(sigma)`, usable as a `rand` distribution in hot loops.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricStable {
    params: StableParams,
    kernel: Kernel,
    /// Multiplier applied to the unit draw; folds in the sqrt(2) of the
    /// Gaussian branch.
    scale: f64,
}

impl SymmetricStable {
    pub fn new(params: StableParams) -> Self {
        let alpha = params.alpha;
        let (kernel, scale) = if alpha == 2.0 {
            (Kernel::Gaussian, params.sigma * std::f64::consts::SQRT_2)
        } else if alpha == 1.0 {
            (Kernel::Cauchy, params.sigma)
        } else {
            (
                Kernel::General {
                    outer: (1.0 - alpha) / alpha,
                    inv_alpha: 1.0 / alpha,
                },
                params.sigma,
            )
        };
        SymmetricStable {
            params,
            kernel,
            scale,
        }
    }

    pub fn params(&self) -> StableParams {
        self.params
    }

    pub fn sample_vec<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out {
            *x = self.sample(rng);
        }
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = match self.kernel {
            Kernel::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                z
            }
            Kernel::Cauchy => (PI * (rng.random::<f64>() - 0.5)).tan(),
            Kernel::General { outer, inv_alpha } => {
                let alpha = self.params.alpha;
                let v = PI * (rng.random::<f64>() - 0.5);
                let w: f64 = Exp1.sample(rng);
                let log_mag = outer * ((v - alpha * v).cos() / w).ln() - inv_alpha * v.cos().ln();
                (alpha * v).sin() * log_mag.exp()
            }
        };
        self.scale * unit
    }
}

/// `n` i.i.d. draws from `SaS(sigma)`.
pub fn sample_sas(params: StableParams, n: usize, stream: &RngStream) -> Result<Vec<f64>> {
    let params = StableParams::new(params.alpha, params.sigma)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    Ok(SymmetricStable::new(params).sample_vec(&mut stream.rng(), n))
}

/// `exp(-|sigma omega|^alpha)`.
pub fn char_fn(params: StableParams, omega: f64) -> f64 {
    (-(params.sigma * omega).abs().powf(params.alpha)).exp()
}

/// Increment of a `dim`-dimensional Levy motion with independent components
/// over a time step `dt`: each component is `SaS(dt^(1/alpha))`.
pub fn levy_increment(alpha: f64, dt: f64, dim: usize, stream: &RngStream) -> Result<Vec<f64>> {
    validate_alpha(alpha)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain("dt", dt, "dt > 0"));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let law = SymmetricStable::new(StableParams::new(alpha, dt.powf(1.0 / alpha))?);
    Ok(law.sample_vec(&mut stream.rng(), dim))
}

/// Whether `E|X|^r` is finite.
pub fn moment_exists(params: StableParams, r: f64) -> bool {
    params.alpha == 2.0 || r < params.alpha
}

/// Constant `c` in the Levy density `c |y|^(-1-alpha)` of `SaS(1)`:
/// `Gamma(1 + alpha) sin(pi alpha / 2) / pi`. It is `1/pi` for the Cauchy law
/// and vanishes at `alpha = 2`, where there are no jumps.
pub fn levy_density_constant(alpha: f64) -> Result<f64> {
    validate_alpha(alpha)?;
    Ok(statrs::function::gamma::gamma(1.0 + alpha) * (FRAC_PI_2 * alpha).sin() / PI)
}
