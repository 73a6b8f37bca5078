//! Euler scheme for the Brownian plus Levy driven gradient flow
//!
//! ```text
//! w_{k+1} = w_k - eta grad f(w_k) + eps sigma sqrt(eta) Z_{k+1} + eps eta^(1/alpha) S_{k+1}
//! ```
//!
//! with `Z` standard Gaussian and `S` symmetric alpha-stable per component,
//! together with the path functionals used to compare against the
//! small-noise theory: first exit times from a ball, valley-to-valley
//! transitions and valley occupancy.
//!
//! Exit conditions are checked after each step only; crossings inside a step
//! are invisible. A step that produces a non-finite state stops the path and
//! is reported as divergence at that step.

use std::io::{self, Write};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{local_lipschitz, Objective};
use crate::report::{fmt_opt, CsvRecord};
use crate::rng::RngStream;
use crate::stable::{levy_density_constant, validate_alpha, StableParams, SymmetricStable};
use crate::stats;

/// How the Levy increments `S` are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevyNormalization {
    /// `S ~ SaS(1)`, i.e. characteristic function `exp(-|w|^alpha)`.
    #[default]
    Characteristic,
    /// `S` rescaled so that the jump measure has density `|y|^(-1-alpha)`,
    /// the convention under which the metastability rates and the exit-time
    /// law hold verbatim. Only defined for `alpha < 2`.
    UnitJumpDensity,
}

impl LevyNormalization {
    /// Multiplier applied to `SaS(1)` draws.
    pub fn factor(self, alpha: f64) -> Result<f64> {
        match self {
            LevyNormalization::Characteristic => Ok(1.0),
            LevyNormalization::UnitJumpDensity => {
                if alpha >= 2.0 {
                    return Err(Error::InvalidParameter(
                        "unit jump density normalisation needs alpha < 2 (Brownian motion has no jumps)".into(),
                    ));
                }
                Ok(levy_density_constant(alpha)?.powf(-1.0 / alpha))
            }
        }
    }

    /// Ratio between the jump density of the simulated noise and the unit
    /// density assumed by the small-noise predictions. Predicted times under
    /// this normalisation are the unit-density ones divided by this value.
    pub fn rate_factor(self, alpha: f64) -> Result<f64> {
        match self {
            LevyNormalization::Characteristic => levy_density_constant(alpha),
            LevyNormalization::UnitJumpDensity => {
                self.factor(alpha)?;
                Ok(1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub eta: f64,
    pub epsilon: f64,
    /// Brownian amplitude relative to `epsilon`.
    pub sigma_brownian: f64,
    pub alpha: f64,
    pub dim: usize,
    pub w0: Vec<f64>,
    pub max_steps: u64,
    #[serde(default)]
    pub normalization: LevyNormalization,
}

impl SdeConfig {
    /// Pure Levy noise (`sigma_brownian = 0`) in `w0.len()` dimensions.
    pub fn levy(alpha: f64, epsilon: f64, eta: f64, w0: Vec<f64>, max_steps: u64) -> Self {
        SdeConfig {
            eta,
            epsilon,
            sigma_brownian: 0.0,
            alpha,
            dim: w0.len(),
            w0,
            max_steps,
            normalization: LevyNormalization::Characteristic,
        }
    }

    pub fn with_normalization(mut self, normalization: LevyNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::domain("eta", self.eta, "eta > 0"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain("epsilon", self.epsilon, "epsilon >= 0"));
        }
        if !(self.sigma_brownian >= 0.0 && self.sigma_brownian.is_finite()) {
            return Err(Error::domain("sigma_brownian", self.sigma_brownian, "sigma >= 0"));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if self.w0.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                actual: self.w0.len(),
            });
        }
        self.normalization.factor(self.alpha)?;
        Ok(())
    }

    /// Same dynamics on a grid `factor` times finer, covering the same time
    /// horizon. Used as a stand-in for the continuous-time process.
    pub fn refined(&self, factor: u64) -> Self {
        SdeConfig {
            eta: self.eta / factor as f64,
            max_steps: self.max_steps * factor,
            ..self.clone()
        }
    }

    fn brownian_scale(&self) -> f64 {
        self.epsilon * self.sigma_brownian * self.eta.sqrt()
    }

    fn levy_scale(&self) -> Result<f64> {
        Ok(self.epsilon * self.eta.powf(1.0 / self.alpha) * self.normalization.factor(self.alpha)?)
    }
}

/// One Euler step with externally supplied standard draws `z` (Gaussian) and
/// `s` (stable), written to `out`.
#[allow(clippy::too_many_arguments)]
pub fn euler_update(
    objective: &Objective,
    w: &[f64],
    eta: f64,
    brownian_scale: f64,
    levy_scale: f64,
    z: &[f64],
    s: &[f64],
    out: &mut [f64],
) {
    objective.gradient(w, out);
    for i in 0..w.len() {
        out[i] = w[i] - eta * out[i] + brownian_scale * z[i] + levy_scale * s[i];
    }
}

/// Stateful stepper over one sample path.
pub struct EulerScheme<'a> {
    objective: &'a Objective,
    eta: f64,
    brownian_scale: f64,
    levy_scale: f64,
    stable: SymmetricStable,
    rng: ChaCha8Rng,
    state: Vec<f64>,
    grad: Vec<f64>,
    steps: u64,
    diverged: bool,
}

impl<'a> EulerScheme<'a> {
    pub fn new(config: &SdeConfig, objective: &'a Objective, stream: &RngStream) -> Result<Self> {
        config.validate()?;
        if objective.dim() != config.dim {
            return Err(Error::Shape {
                expected: config.dim,
                actual: objective.dim(),
            });
        }
        Ok(EulerScheme {
            objective,
            eta: config.eta,
            brownian_scale: config.brownian_scale(),
            levy_scale: config.levy_scale()?,
            stable: SymmetricStable::new(StableParams::standard(config.alpha)?),
            rng: stream.rng(),
            state: config.w0.clone(),
            grad: vec![0.0; config.dim],
            steps: 0,
            diverged: false,
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.eta
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Advance one step. Returns `false` once the state has become
    /// non-finite; the scheme then stays put.
    pub fn step(&mut self) -> bool {
        if self.diverged {
            return false;
        }
        self.objective.gradient(&self.state, &mut self.grad);
        let mut finite = true;
        for (x, g) in self.state.iter_mut().zip(&self.grad) {
            let mut next = *x - self.eta * g;
            if self.brownian_scale != 0.0 {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                next += self.brownian_scale * z;
            }
            if self.levy_scale != 0.0 {
                next += self.levy_scale * self.stable.sample(&mut self.rng);
            }
            finite &= next.is_finite();
            *x = next;
        }
        self.steps += 1;
        self.diverged = !finite;
        finite
    }
}

/// Stored sample path `w^0, w^1, ...` in row-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub eta: f64,
    points: Vec<f64>,
    /// Step at which the state became non-finite; that state is not stored.
    pub diverged_at: Option<u64>,
}

impl Trajectory {
    pub fn from_points(dim: usize, eta: f64, points: Vec<f64>) -> Self {
        assert_eq!(points.len() % dim, 0);
        Trajectory {
            dim,
            eta,
            points,
            diverged_at: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// `step,time,coord_0,...,coord_{d-1}`
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let coords: Vec<String> = (0..self.dim).map(|i| format!("coord_{i}")).collect();
        writeln!(out, "step,time,{}", coords.join(","))?;
        for (k, p) in self.iter().enumerate() {
            let vals: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{},{}", k, k as f64 * self.eta, vals.join(","))?;
        }
        Ok(())
    }
}

/// Simulate up to `max_steps` steps, keeping every iterate.
pub fn simulate(config: &SdeConfig, objective: &Objective, stream: &RngStream) -> Result<Trajectory> {
    let mut scheme = EulerScheme::new(config, objective, stream)?;
    let mut points = Vec::with_capacity(config.dim * (config.max_steps as usize + 1).min(1 << 24));
    points.extend_from_slice(scheme.state());
    let mut diverged_at = None;
    while scheme.steps() < config.max_steps {
        if !scheme.step() {
            diverged_at = Some(scheme.steps());
            break;
        }
        points.extend_from_slice(scheme.state());
    }
    Ok(Trajectory {
        dim: config.dim,
        eta: config.eta,
        points,
        diverged_at,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeRecord {
    pub replicate: u64,
    pub exited: bool,
    /// The exit was a jump to a non-finite state.
    pub diverged: bool,
    pub exit_step: Option<u64>,
    pub exit_time: Option<f64>,
    pub radius_a: f64,
    pub margin_xi: f64,
    pub center: Vec<f64>,
}

impl CsvRecord for ExitTimeRecord {
    fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["replicate", "exited", "diverged", "exit_step", "exit_time", "radius_a", "margin_xi"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..self.center.len()).map(|i| format!("center_{i}")));
        h
    }

    fn csv_fields(&self) -> Vec<String> {
        let mut f = vec![
            self.replicate.to_string(),
            self.exited.to_string(),
            self.diverged.to_string(),
            fmt_opt(self.exit_step),
            fmt_opt(self.exit_time),
            self.radius_a.to_string(),
            self.margin_xi.to_string(),
        ];
        f.extend(self.center.iter().map(|x| x.to_string()));
        f
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// First step at which `|w^k - center| > a + xi`, or a censored record if
/// the path stays inside for `max_steps` steps.
pub fn first_exit(
    config: &SdeConfig,
    objective: &Objective,
    center: &[f64],
    a: f64,
    xi: f64,
    stream: &RngStream,
) -> Result<ExitTimeRecord> {
    if !(a > 0.0) {
        return Err(Error::domain("a", a, "a > 0"));
    }
    if !(xi >= 0.0) {
        return Err(Error::domain("xi", xi, "xi >= 0"));
    }
    if center.len() != config.dim {
        return Err(Error::Shape {
            expected: config.dim,
            actual: center.len(),
        });
    }
    let radius = a + xi;
    if distance(&config.w0, center) > radius {
        return Err(Error::InvalidParameter(format!(
            "initial point lies outside the ball of radius {radius} around the center"
        )));
    }
    let mut scheme = EulerScheme::new(config, objective, stream)?;
    let mut record = ExitTimeRecord {
        replicate: 0,
        exited: false,
        diverged: false,
        exit_step: None,
        exit_time: None,
        radius_a: a,
        margin_xi: xi,
        center: center.to_vec(),
    };
    while scheme.steps() < config.max_steps {
        let finite = scheme.step();
        if !finite || distance(scheme.state(), center) > radius {
            record.exited = true;
            record.diverged = !finite;
            record.exit_step = Some(scheme.steps());
            record.exit_time = Some(scheme.time());
            break;
        }
    }
    Ok(record)
}

/// Independent replicates of [`first_exit`]; replicate `r` uses
/// `stream.substream(r)`.
pub fn first_exit_replicates(
    config: &SdeConfig,
    objective: &Objective,
    center: &[f64],
    a: f64,
    xi: f64,
    stream: &RngStream,
    replicates: u64,
) -> Result<Vec<ExitTimeRecord>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rec = first_exit(config, objective, center, a, xi, &stream.substream(r))?;
            rec.replicate = r;
            Ok(rec)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSummary {
    pub replicates: usize,
    pub exited: usize,
    pub diverged: usize,
    /// Replicates still inside after `max_steps`.
    pub censored: usize,
    /// Mean over exited replicates, diverged ones included.
    pub mean_exit_time: f64,
    pub stderr_exit_time: f64,
}

impl ExitSummary {
    pub fn diverged_fraction(&self) -> f64 {
        self.diverged as f64 / self.replicates.max(1) as f64
    }
}

pub fn summarize_exits(records: &[ExitTimeRecord]) -> ExitSummary {
    let times: Vec<f64> = records.iter().filter_map(|r| r.exit_time).collect();
    ExitSummary {
        replicates: records.len(),
        exited: times.len(),
        diverged: records.iter().filter(|r| r.diverged).count(),
        censored: records.iter().filter(|r| !r.exited).count(),
        mean_exit_time: if times.is_empty() { f64::NAN } else { stats::mean(&times) },
        stderr_exit_time: if times.len() < 2 { f64::NAN } else { stats::std_error(&times) },
    }
}

/// Fraction of replicates that have exited by `time`.
pub fn exit_fraction_by(records: &[ExitTimeRecord], time: f64) -> f64 {
    let hits = records.iter().filter(|r| r.exit_time.is_some_and(|t| t <= time)).count();
    hits as f64 / records.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub replicate: u64,
    pub start_basin: usize,
    pub end_basin: usize,
    /// Step at which the neighborhood of the new minimum was entered.
    pub transition_step: u64,
    /// Time spent since the start basin's neighborhood was entered.
    pub transition_time: f64,
}

impl CsvRecord for TransitionRecord {
    fn csv_header(&self) -> Vec<String> {
        crate::report::header(&["replicate", "start_basin", "end_basin", "transition_step", "transition_time"])
    }

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.replicate.to_string(),
            self.start_basin.to_string(),
            self.end_basin.to_string(),
            self.transition_step.to_string(),
            self.transition_time.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTrace {
    pub records: Vec<TransitionRecord>,
    pub steps: u64,
    pub diverged_at: Option<u64>,
}

/// Record every entry into the `delta`-neighborhood of a minimum other than
/// the last one visited. Basin indices are 0-based in minimum order.
pub fn transition_trace(
    config: &SdeConfig,
    objective: &Objective,
    delta: f64,
    stream: &RngStream,
) -> Result<TransitionTrace> {
    let geom = objective
        .geometry()
        .ok_or(Error::Unsupported("transition tracing needs declared basin geometry"))?;
    if !(delta > 0.0 && delta < geom.max_delta()) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must lie in (0, {}) so each neighborhood stays inside its valley",
            geom.max_delta()
        )));
    }
    let neighborhood = |x: f64| geom.minima.iter().position(|m| (x - m).abs() <= delta);

    let mut scheme = EulerScheme::new(config, objective, stream)?;
    let mut current: Option<(usize, u64)> = neighborhood(scheme.state()[0]).map(|b| (b, 0));
    let mut records = Vec::new();
    let mut diverged_at = None;
    while scheme.steps() < config.max_steps {
        if !scheme.step() {
            diverged_at = Some(scheme.steps());
            break;
        }
        let Some(basin) = neighborhood(scheme.state()[0]) else {
            continue;
        };
        match current {
            None => current = Some((basin, scheme.steps())),
            Some((from, since)) if from != basin => {
                records.push(TransitionRecord {
                    replicate: 0,
                    start_basin: from,
                    end_basin: basin,
                    transition_step: scheme.steps(),
                    transition_time: (scheme.steps() - since) as f64 * config.eta,
                });
                current = Some((basin, scheme.steps()));
            }
            Some(_) => {}
        }
    }
    Ok(TransitionTrace {
        records,
        steps: scheme.steps(),
        diverged_at,
    })
}

/// Independent replicates of [`transition_trace`]; replicate `r` uses
/// `stream.substream(r)` and its records carry `replicate = r`.
pub fn transition_replicates(
    config: &SdeConfig,
    objective: &Objective,
    delta: f64,
    stream: &RngStream,
    replicates: u64,
) -> Result<Vec<TransitionTrace>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut trace = transition_trace(config, objective, delta, &stream.substream(r))?;
            trace.records.iter_mut().for_each(|rec| rec.replicate = r);
            Ok(trace)
        })
        .collect()
}

/// Fraction of the stored iterates lying in each valley.
pub fn occupancy(trajectory: &Trajectory, objective: &Objective) -> Result<Vec<f64>> {
    let geom = objective
        .geometry()
        .ok_or(Error::Unsupported("occupancy needs declared basin geometry"))?;
    let mut counts = vec![0u64; geom.len()];
    for p in trajectory.iter() {
        counts[geom.valley_of(p[0])] += 1;
    }
    let total = trajectory.len().max(1) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Valley visit counts accumulated without storing the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyCounts {
    pub counts: Vec<u64>,
    /// Paths that ended in divergence; their pre-divergence iterates count.
    pub diverged_paths: u64,
}

impl OccupancyCounts {
    pub fn fractions(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        self.counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
    }

    fn merge(mut self, other: OccupancyCounts) -> OccupancyCounts {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.diverged_paths += other.diverged_paths;
        self
    }
}

/// Streaming occupancy over `replicates` independent paths of `max_steps`
/// steps each, merged after completion.
pub fn occupancy_replicates(
    config: &SdeConfig,
    objective: &Objective,
    stream: &RngStream,
    replicates: u64,
) -> Result<OccupancyCounts> {
    let geom = objective
        .geometry()
        .ok_or(Error::Unsupported("occupancy needs declared basin geometry"))?;
    let empty = OccupancyCounts {
        counts: vec![0; geom.len()],
        diverged_paths: 0,
    };
    let parts: Vec<OccupancyCounts> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut scheme = EulerScheme::new(config, objective, &stream.substream(r))?;
            let mut counts = vec![0u64; geom.len()];
            counts[geom.valley_of(scheme.state()[0])] += 1;
            let mut diverged_paths = 0;
            while scheme.steps() < config.max_steps {
                if !scheme.step() {
                    diverged_paths = 1;
                    break;
                }
                counts[geom.valley_of(scheme.state()[0])] += 1;
            }
            Ok(OccupancyCounts { counts, diverged_paths })
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(empty, OccupancyCounts::merge))
}

/// Conservative step size `0.1 / M_local`, with `M_local` a grid estimate of
/// the gradient's Lipschitz constant within `radius` of `center`.
pub fn suggest_step_size(objective: &Objective, center: &[f64], radius: f64) -> f64 {
    let m = local_lipschitz(objective, center, radius);
    if m > 0.0 {
        0.1 / m
    } else {
        0.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{double_well, quadratic};

    #[test]
    fn noiseless_quadratic_is_geometric() {
        let q = quadratic(1).unwrap();
        let cfg = SdeConfig::levy(1.5, 0.0, 0.1, vec![1.0], 50);
        let path = simulate(&cfg, &q, &RngStream::new(0)).unwrap();
        assert_eq!(path.len(), 51);
        for (k, p) in path.iter().enumerate() {
            assert!((p[0] - 0.9f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        let q = quadratic(1).unwrap();
        let bad = [
            SdeConfig::levy(0.0, 0.1, 0.1, vec![0.0], 1),
            SdeConfig::levy(1.5, -0.1, 0.1, vec![0.0], 1),
            SdeConfig::levy(1.5, 0.1, 0.0, vec![0.0], 1),
            SdeConfig::levy(2.0, 0.1, 0.1, vec![0.0], 1).with_normalization(LevyNormalization::UnitJumpDensity),
        ];
        for cfg in &bad {
            assert!(simulate(cfg, &q, &RngStream::new(0)).is_err(), "{cfg:?}");
        }
        let two_d = SdeConfig::levy(1.5, 0.1, 0.1, vec![0.0, 0.0], 1);
        assert!(simulate(&two_d, &q, &RngStream::new(0)).is_err());
    }

    #[test]
    fn stationary_start_never_exits() {
        let q = quadratic(2).unwrap();
        let cfg = SdeConfig::levy(1.5, 0.0, 0.01, vec![0.0, 0.0], 1000);
        let rec = first_exit(&cfg, &q, &[0.0, 0.0], 1.0, 0.0, &RngStream::new(3)).unwrap();
        assert!(!rec.exited && rec.exit_step.is_none());
    }

    #[test]
    fn exit_requires_start_inside() {
        let q = quadratic(1).unwrap();
        let cfg = SdeConfig::levy(1.5, 0.1, 0.01, vec![2.0], 10);
        assert!(first_exit(&cfg, &q, &[0.0], 1.0, 0.5, &RngStream::new(0)).is_err());
        assert!(first_exit(&cfg, &q, &[0.0], 1.0, 1.0, &RngStream::new(0)).is_ok());
    }

    #[test]
    fn transitions_need_geometry_and_small_delta() {
        let cfg = SdeConfig::levy(1.2, 0.0, 0.01, vec![-1.0], 100);
        let dw = double_well(-1.0, 2.0, 1.0).unwrap();
        let trace = transition_trace(&cfg, &dw, 0.2, &RngStream::new(0)).unwrap();
        assert!(trace.records.is_empty());
        assert!(matches!(
            transition_trace(&cfg, &dw, 1.5, &RngStream::new(0)),
            Err(Error::InvalidParameter(_))
        ));
        let q = quadratic(1).unwrap();
        assert!(matches!(
            transition_trace(&cfg, &q, 0.2, &RngStream::new(0)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn occupancy_of_single_valley_path() {
        let dw = double_well(-1.0, 2.0, 1.0).unwrap();
        let path = Trajectory::from_points(1, 0.1, vec![-1.0, -0.5, -1.2, -0.1]);
        assert_eq!(occupancy(&path, &dw).unwrap(), vec![1.0, 0.0]);
        assert!(occupancy(&path, &quadratic(1).unwrap()).is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let path = Trajectory::from_points(2, 0.5, vec![1.0, 2.0, 3.0, 4.0]);
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,time,coord_0,coord_1\n0,0,1,2\n1,0.5,3,4\n");
    }

    #[test]
    fn normalization_factors() {
        assert_eq!(LevyNormalization::Characteristic.factor(1.3).unwrap(), 1.0);
        // Cauchy: density 1/(pi y^2), so unit density needs scale pi.
        let f = LevyNormalization::UnitJumpDensity.factor(1.0).unwrap();
        assert!((f - std::f64::consts::PI).abs() < 1e-12);
        assert!(LevyNormalization::UnitJumpDensity.factor(2.0).is_err());
    }
}
