//! Heavy-tailed SGD against its min-gradient-norm rate bound.
//!
//! The iteration is `w^{k+1} = w^k - eta (grad f(w^k) + U_k)` with `U_k`
//! mean-zero noise added coordinate-wise to the exact gradient. When
//! `E |grad f + U|^{1+gamma} <= sigma_gamma^{1+gamma}` and the gradient is
//! `gamma`-Holder with constant `M`, a constant step `eta` over `K` steps gives
//!
//! ```text
//! min_{k<K} E |grad f(w^k)|^2 <= gap / (K eta) + M / (1 + gamma) eta^gamma sigma_gamma^{1+gamma}
//! ```
//!
//! and `eta = c_gamma / K^{1/(1+gamma)}` turns this into `O(K^{-gamma/(1+gamma)})`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::report::{header, CsvRecord};
use crate::rng::RngStream;
use crate::stable::{validate_alpha, StableParams, SymmetricStable};
use crate::stats;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("gamma", gamma, "0 < gamma <= 1"))
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(name, v, "positive and finite"))
    }
}

/// Stepsize constant minimising the constant-step bound at
/// `eta = c / K^{1/(1+gamma)}`.
pub fn optimal_c_gamma(gamma: f64, sigma_gamma: f64, m: f64, gap: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_positive("sigma_gamma", sigma_gamma)?;
    check_positive("M", m)?;
    check_positive("gap", gap)?;
    Ok(((1.0 + gamma) / (gamma * m) * gap).powf(1.0 / (1.0 + gamma)) / sigma_gamma)
}

/// Prefactor `a_gamma` of the guaranteed rate `a_gamma / K^{gamma/(1+gamma)}`.
/// For `gamma < 1` this is looser than the constant-step bound evaluated at
/// `c_gamma`, which it dominates.
pub fn a_gamma_bound(gamma: f64, sigma_gamma: f64, m: f64, gap: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_positive("sigma_gamma", sigma_gamma)?;
    check_positive("M", m)?;
    if !(gap >= 0.0) {
        return Err(Error::domain("gap", gap, "gap >= 0"));
    }
    Ok(sigma_gamma * ((1.0 + gamma) / gamma * m).powf(1.0 / (1.0 + gamma)) * gap.powf(gamma / (1.0 + gamma)))
}

/// Right-hand side of the constant-step bound on `min_k E |grad f(w^k)|^2`.
pub fn constant_step_bound(k: u64, eta: f64, gamma: f64, sigma_gamma: f64, m: f64, gap: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_positive("sigma_gamma", sigma_gamma)?;
    check_positive("eta", eta)?;
    check_positive("M", m)?;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if !(gap >= 0.0) {
        return Err(Error::domain("gap", gap, "gap >= 0"));
    }
    Ok(gap / (k as f64 * eta) + m / (1.0 + gamma) * eta.powf(gamma) * sigma_gamma.powf(1.0 + gamma))
}

/// `gamma = 0.8 (alpha - 1)`, inside the admissible range `[0, alpha - 1)`.
pub fn default_gamma(alpha: f64) -> f64 {
    0.8 * (alpha - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// i.i.d. `SaS(scale)` per coordinate.
    Stable { alpha: f64, scale: f64 },
    /// i.i.d. `N(0, std^2)` per coordinate.
    Gaussian { std: f64 },
    None,
}

impl NoiseModel {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            NoiseModel::Stable { alpha, .. } => Some(*alpha),
            NoiseModel::Gaussian { .. } => Some(2.0),
            NoiseModel::None => None,
        }
    }

    fn sampler(&self) -> Result<NoiseSampler> {
        Ok(match *self {
            NoiseModel::Stable { alpha, scale } => {
                validate_alpha(alpha)?;
                NoiseSampler::Stable(SymmetricStable::new(StableParams::new(alpha, scale)?))
            }
            NoiseModel::Gaussian { std } => {
                if !(std >= 0.0 && std.is_finite()) {
                    return Err(Error::domain("std", std, "std >= 0"));
                }
                NoiseSampler::Gaussian(std)
            }
            NoiseModel::None => NoiseSampler::Gaussian(0.0),
        })
    }
}

enum NoiseSampler {
    Stable(SymmetricStable),
    Gaussian(f64),
}

impl NoiseSampler {
    fn add_to<R: Rng>(&self, rng: &mut R, g: &mut [f64]) {
        match self {
            NoiseSampler::Stable(s) => g.iter_mut().for_each(|x| *x += s.sample(rng)),
            NoiseSampler::Gaussian(std) if *std > 0.0 => g.iter_mut().for_each(|x| {
                let z: f64 = StandardNormal.sample(rng);
                *x += std * z
            }),
            NoiseSampler::Gaussian(_) => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepsizeRule {
    Constant { eta: f64 },
    /// `eta = c / K^{1/(1+gamma)}`; `c = None` selects `c_gamma`.
    Scaled { c: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub gamma: f64,
    /// Moment bound; estimated at `w0` when absent.
    pub sigma_gamma: Option<f64>,
    /// Holder constant of the gradient.
    pub holder_m: f64,
    /// Iteration counts of the sweep.
    pub ks: Vec<u64>,
    pub stepsize_rule: StepsizeRule,
    /// `f(w0) - f_*`; taken from the objective when absent.
    pub gap: Option<f64>,
    pub replicates: usize,
    pub w0: Vec<f64>,
    /// Draws used when estimating `sigma_gamma`.
    pub sigma_draws: usize,
}

impl ConvergenceConfig {
    pub fn new(gamma: f64, holder_m: f64, ks: Vec<u64>, w0: Vec<f64>) -> Self {
        ConvergenceConfig {
            gamma,
            sigma_gamma: None,
            holder_m,
            ks,
            stepsize_rule: StepsizeRule::Scaled { c: None },
            gap: None,
            replicates: 100,
            w0,
            sigma_draws: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub k: u64,
    pub eta: f64,
    pub gamma: f64,
    pub alpha: Option<f64>,
    /// `min_{k<K}` of the replicate-averaged `|grad f(w^k)|^2`.
    pub min_grad_sq_mean: f64,
    /// Standard error across replicates at the minimising iteration.
    pub min_grad_sq_stderr: f64,
    /// Constant-step bound at this `(K, eta)`.
    pub bound: f64,
    pub diverged_fraction: f64,
}

impl CsvRecord for ConvergencePoint {
    fn csv_header(&self) -> Vec<String> {
        header(&[
            "K",
            "eta",
            "gamma",
            "alpha",
            "min_grad_sq_mean",
            "min_grad_sq_stderr",
            "bound",
            "diverged_fraction",
        ])
    }

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.eta.to_string(),
            self.gamma.to_string(),
            crate::report::fmt_opt(self.alpha),
            self.min_grad_sq_mean.to_string(),
            self.min_grad_sq_stderr.to_string(),
            self.bound.to_string(),
            self.diverged_fraction.to_string(),
        ]
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Monte Carlo estimate of `(E |grad f(w) + U|^{1+gamma})^{1/(1+gamma)}`.
pub fn estimate_sigma_gamma(
    objective: &Objective,
    noise: &NoiseModel,
    w: &[f64],
    gamma: f64,
    draws: usize,
    stream: &RngStream,
) -> Result<f64> {
    if draws == 0 {
        return Err(Error::InsufficientSamples { needed: 1, available: 0 });
    }
    let sampler = noise.sampler()?;
    let grad = objective.gradient_vec(w);
    let mut rng = stream.rng();
    let mut g = vec![0.0; grad.len()];
    let mut total = 0.0;
    for _ in 0..draws {
        g.copy_from_slice(&grad);
        sampler.add_to(&mut rng, &mut g);
        total += norm(&g).powf(1.0 + gamma);
    }
    Ok((total / draws as f64).powf(1.0 / (1.0 + gamma)))
}

/// Squared gradient norms `|grad f(w^k)|^2` for `k = 0..K-1`, or `None` if
/// the iterate became non-finite.
fn sgd_path(
    objective: &Objective,
    sampler: &NoiseSampler,
    w0: &[f64],
    eta: f64,
    k: u64,
    stream: &RngStream,
) -> Option<Vec<f64>> {
    let mut rng = stream.rng();
    let mut w = w0.to_vec();
    let mut g = vec![0.0; w.len()];
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        objective.gradient(&w, &mut g);
        let sq: f64 = g.iter().map(|x| x * x).sum();
        if !sq.is_finite() {
            return None;
        }
        out.push(sq);
        sampler.add_to(&mut rng, &mut g);
        for (x, d) in w.iter_mut().zip(&g) {
            *x -= eta * d;
        }
    }
    Some(out)
}

/// Run the sweep over `config.ks`. Sweep entry `i`, replicate `r` uses
/// `stream.substream(i + 1).substream(r)`; substream 0 drives the
/// `sigma_gamma` estimate.
pub fn run_convergence(
    objective: &Objective,
    noise: &NoiseModel,
    config: &ConvergenceConfig,
    stream: &RngStream,
) -> Result<Vec<ConvergencePoint>> {
    if config.w0.len() != objective.dim() {
        return Err(Error::Shape {
            expected: objective.dim(),
            actual: config.w0.len(),
        });
    }
    if config.ks.is_empty() || config.ks.contains(&0) {
        return Err(Error::InvalidParameter("K sweep must be non-empty with every K >= 1".into()));
    }
    if config.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be at least 1".into()));
    }
    check_gamma(config.gamma)?;
    if let NoiseModel::Stable { alpha, .. } = noise {
        if config.gamma >= alpha - 1.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must be below alpha - 1 = {}",
                config.gamma,
                alpha - 1.0
            )));
        }
    }
    let gap = match config.gap {
        Some(g) => g,
        None => {
            let f_star = objective
                .f_star()
                .ok_or(Error::Unsupported("objective has no known minimum value; supply the gap"))?;
            objective.value(&config.w0) - f_star
        }
    };
    let sigma_gamma = match config.sigma_gamma {
        Some(s) => s,
        None => estimate_sigma_gamma(
            objective,
            noise,
            &config.w0,
            config.gamma,
            config.sigma_draws,
            &stream.substream(0),
        )?,
    };
    let sampler = noise.sampler()?;

    config
        .ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let eta = match config.stepsize_rule {
                StepsizeRule::Constant { eta } => eta,
                StepsizeRule::Scaled { c } => {
                    let c = match c {
                        Some(c) => c,
                        None => optimal_c_gamma(config.gamma, sigma_gamma, config.holder_m, gap)?,
                    };
                    c / (k as f64).powf(1.0 / (1.0 + config.gamma))
                }
            };
            let sweep = stream.substream(i as u64 + 1);
            let paths: Vec<Option<Vec<f64>>> = (0..config.replicates as u64)
                .into_par_iter()
                .map(|r| sgd_path(objective, &sampler, &config.w0, eta, k, &sweep.substream(r)))
                .collect();
            let kept: Vec<Vec<f64>> = paths.into_iter().flatten().collect();
            let diverged_fraction = 1.0 - kept.len() as f64 / config.replicates as f64;
            let (min_mean, stderr) = if kept.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let mut means = vec![0.0; k as usize];
                for p in &kept {
                    for (m, v) in means.iter_mut().zip(p) {
                        *m += v;
                    }
                }
                let (arg, min) = means
                    .iter()
                    .map(|m| m / kept.len() as f64)
                    .enumerate()
                    .fold((0, f64::INFINITY), |best, (j, m)| if m < best.1 { (j, m) } else { best });
                let at: Vec<f64> = kept.iter().map(|p| p[arg]).collect();
                let se = if at.len() > 1 { stats::std_error(&at) } else { 0.0 };
                (min, se)
            };
            Ok(ConvergencePoint {
                k,
                eta,
                gamma: config.gamma,
                alpha: noise.alpha(),
                min_grad_sq_mean: min_mean,
                min_grad_sq_stderr: stderr,
                bound: constant_step_bound(k, eta, config.gamma, sigma_gamma, config.holder_m, gap)?,
                diverged_fraction,
            })
        })
        .collect()
}

/// Log-log slope of `min_grad_sq_mean` against `K`.
pub fn rate_slope(points: &[ConvergencePoint]) -> f64 {
    let ks: Vec<f64> = points.iter().map(|p| p.k as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.min_grad_sq_mean).collect();
    stats::loglog_slope(&ks, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::quadratic;

    #[test]
    fn plug_in_values() {
        assert!((optimal_c_gamma(1.0, 1.0, 1.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((optimal_c_gamma(1.0, 2.0, 1.0, 1.0).unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((optimal_c_gamma(0.5, 1.0, 2.0, 3.0).unwrap() - 4.5f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((a_gamma_bound(1.0, 1.0, 1.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(a_gamma_bound(0.7, 1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!((a_gamma_bound(0.5, 1.0, 1.0, 1.0).unwrap() - 3f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((constant_step_bound(1, 1.0, 1.0, 1.0, 2.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_zero_rejected() {
        assert!(optimal_c_gamma(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(a_gamma_bound(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(constant_step_bound(1, 1.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(constant_step_bound(1, 1.0, 1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_limit() {
        let b = constant_step_bound(1, 1.0, 1.0, 1e-6, 1.0, 0.0).unwrap();
        assert!((b - 0.5e-12).abs() < 1e-24);
    }

    #[test]
    fn zero_noise_decays_geometrically() {
        let q = quadratic(3).unwrap();
        let mut cfg = ConvergenceConfig::new(1.0, 1.0, vec![10, 100], vec![1.0, -2.0, 0.5]);
        cfg.stepsize_rule = StepsizeRule::Constant { eta: 0.5 };
        cfg.sigma_gamma = Some(1.0);
        cfg.replicates = 3;
        let pts = run_convergence(&q, &NoiseModel::None, &cfg, &RngStream::new(1)).unwrap();
        let g0 = 1.0 + 4.0 + 0.25;
        assert!((pts[0].min_grad_sq_mean - g0 * 0.25f64.powi(9)).abs() < 1e-12);
        assert!(pts[1].min_grad_sq_mean < 1e-50);
        assert!(pts.iter().all(|p| p.min_grad_sq_mean <= p.bound && p.diverged_fraction == 0.0));
    }

    #[test]
    fn gamma_must_stay_below_alpha_minus_one() {
        let q = quadratic(1).unwrap();
        let cfg = ConvergenceConfig::new(0.6, 1.0, vec![10], vec![1.0]);
        let noise = NoiseModel::Stable { alpha: 1.5, scale: 1.0 };
        assert!(run_convergence(&q, &noise, &cfg, &RngStream::new(0)).is_err());
    }

    #[test]
    fn default_gamma_inside_range() {
        assert!((default_gamma(1.5) - 0.4).abs() < 1e-15);
    }
}
