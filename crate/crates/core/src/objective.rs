//! Differentiable test objectives with exact gradients and, for the scalar
//! double well, declared basin geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance below which a declared critical point counts as degenerate.
const DEGENERATE_CURVATURE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Objective {
    /// `f(w) = |w|^2 / 2`.
    Quadratic { dim: usize },
    /// Scalar objective with `f'(w) = scale * w (w - m1) (w - m2)` and
    /// `f(0) = 0`: minima at `m1 < 0 < m2`, local maximum at 0.
    DoubleWell { m1: f64, m2: f64, scale: f64 },
    /// `f(w) = |w|^(1 + gamma) / (1 + gamma)`; its gradient is
    /// gamma-Holder continuous with constant `2^(1 - gamma)`.
    PowerNorm { dim: usize, gamma: f64 },
}

/// Interleaved local minima and interior local maxima of a scalar objective:
/// `m_1 < s_1 < m_2 < ... < s_{r-1} < m_r`. The outer saddles are at
/// minus and plus infinity and are implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinGeometry {
    pub minima: Vec<f64>,
    pub saddles: Vec<f64>,
}

impl BasinGeometry {
    pub fn new(minima: Vec<f64>, saddles: Vec<f64>) -> Result<Self> {
        if minima.is_empty() || saddles.len() + 1 != minima.len() {
            return Err(Error::InvalidParameter(format!(
                "need r minima and r-1 saddles, got {} and {}",
                minima.len(),
                saddles.len()
            )));
        }
        for (i, s) in saddles.iter().enumerate() {
            if !(minima[i] < *s && *s < minima[i + 1]) {
                return Err(Error::InvalidParameter(format!(
                    "ordering m_{} < s_{} < m_{} violated",
                    i + 1,
                    i + 1,
                    i + 2
                )));
            }
        }
        if minima.iter().chain(&saddles).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("critical points must be finite".into()));
        }
        Ok(BasinGeometry { minima, saddles })
    }

    pub fn len(&self) -> usize {
        self.minima.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minima.is_empty()
    }

    /// Index of the valley `(s_{i-1}, s_i)` containing `x`. Points exactly on
    /// a saddle are assigned to the valley on its left.
    pub fn valley_of(&self, x: f64) -> usize {
        self.saddles.iter().take_while(|&&s| x > s).count()
    }

    /// Largest admissible neighborhood radius: every `[m_i - delta, m_i + delta]`
    /// must sit strictly inside its valley.
    pub fn max_delta(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, m) in self.minima.iter().enumerate() {
            if i > 0 {
                d = d.min(m - self.saddles[i - 1]);
            }
            if i < self.saddles.len() {
                d = d.min(self.saddles[i] - m);
            }
        }
        d
    }
}

pub fn quadratic(dim: usize) -> Result<Objective> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(Objective::Quadratic { dim })
}

pub fn double_well(m1: f64, m2: f64, scale: f64) -> Result<Objective> {
    if !(m1 < 0.0 && 0.0 < m2) || !m1.is_finite() || !m2.is_finite() {
        return Err(Error::InvalidParameter(format!("double well needs m1 < 0 < m2, got m1={m1}, m2={m2}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::domain("scale", scale, "scale > 0"));
    }
    Ok(Objective::DoubleWell { m1, m2, scale })
}

pub fn power_norm(dim: usize, gamma: f64) -> Result<Objective> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::domain("gamma", gamma, "0 < gamma <= 1"));
    }
    Ok(Objective::PowerNorm { dim, gamma })
}

impl Objective {
    pub fn dim(&self) -> usize {
        match *self {
            Objective::Quadratic { dim } | Objective::PowerNorm { dim, .. } => dim,
            Objective::DoubleWell { .. } => 1,
        }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.dim());
        match *self {
            Objective::Quadratic { .. } => 0.5 * norm_sq(w),
            Objective::DoubleWell { m1, m2, scale } => {
                let x = w[0];
                scale * (x.powi(4) / 4.0 - (m1 + m2) * x.powi(3) / 3.0 + m1 * m2 * x * x / 2.0)
            }
            Objective::PowerNorm { gamma, .. } => norm_sq(w).sqrt().powf(1.0 + gamma) / (1.0 + gamma),
        }
    }

    pub fn gradient(&self, w: &[f64], out: &mut [f64]) {
        debug_assert_eq!(w.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        match *self {
            Objective::Quadratic { .. } => out.copy_from_slice(w),
            Objective::DoubleWell { m1, m2, scale } => {
                let x = w[0];
                out[0] = scale * x * (x - m1) * (x - m2);
            }
            Objective::PowerNorm { gamma, .. } => {
                let r = norm_sq(w).sqrt();
                let factor = if r > 0.0 { r.powf(gamma - 1.0) } else { 0.0 };
                for (o, x) in out.iter_mut().zip(w) {
                    *o = factor * x;
                }
            }
        }
    }

    pub fn gradient_vec(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient(w, &mut g);
        g
    }

    /// Analytic second derivative for scalar objectives.
    pub fn second_derivative(&self, x: f64) -> Option<f64> {
        match *self {
            Objective::DoubleWell { m1, m2, scale } => Some(scale * (3.0 * x * x - 2.0 * (m1 + m2) * x + m1 * m2)),
            Objective::Quadratic { dim: 1 } => Some(1.0),
            _ => None,
        }
    }

    pub fn geometry(&self) -> Option<BasinGeometry> {
        match *self {
            Objective::DoubleWell { m1, m2, .. } => Some(BasinGeometry {
                minima: vec![m1, m2],
                saddles: vec![0.0],
            }),
            _ => None,
        }
    }

    /// Declared local minima (points, not scalars).
    pub fn minima(&self) -> Vec<Vec<f64>> {
        match *self {
            Objective::Quadratic { dim } | Objective::PowerNorm { dim, .. } => vec![vec![0.0; dim]],
            Objective::DoubleWell { m1, m2, .. } => vec![vec![m1], vec![m2]],
        }
    }

    pub fn f_star(&self) -> Option<f64> {
        match *self {
            Objective::Quadratic { .. } | Objective::PowerNorm { .. } => Some(0.0),
            Objective::DoubleWell { m1, m2, .. } => Some(self.value(&[m1]).min(self.value(&[m2]))),
        }
    }

    /// Declared critical points whose curvature is numerically flat. Each hit
    /// is also logged as a warning since the small-noise predictions assume
    /// non-degenerate extrema.
    pub fn degenerate_critical_points(&self) -> Vec<f64> {
        let Some(geom) = self.geometry() else {
            return Vec::new();
        };
        let flat: Vec<f64> = geom
            .minima
            .iter()
            .chain(&geom.saddles)
            .copied()
            .filter(|&x| self.second_derivative(x).is_some_and(|c| c.abs() < DEGENERATE_CURVATURE))
            .collect();
        for x in &flat {
            log::warn!("near-degenerate curvature at declared critical point {x}");
        }
        flat
    }
}

fn norm_sq(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `<x, grad f(x)> >= m |x|^(1+gamma) - b` at every probe.
pub fn check_dissipativity(objective: &Objective, m: f64, b: f64, gamma: f64, probes: &[Vec<f64>]) -> bool {
    probes.iter().all(|x| {
        let g = objective.gradient_vec(x);
        let inner: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
        inner >= m * norm_sq(x).powf(0.5 * (1.0 + gamma)) - b
    })
}

/// `|grad f(x) - grad f(y)| <= M |x - y|^gamma` on every pair.
pub fn check_holder(objective: &Objective, holder_m: f64, gamma: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> bool {
    pairs.iter().all(|(x, y)| {
        let gx = objective.gradient_vec(x);
        let gy = objective.gradient_vec(y);
        dist(&gx, &gy) <= holder_m * dist(x, y).powf(gamma)
    })
}

/// Largest gradient difference quotient over a grid of axis-aligned probe
/// pairs within `radius` of `center`; a local Lipschitz estimate.
pub fn local_lipschitz(objective: &Objective, center: &[f64], radius: f64) -> f64 {
    const STEPS: usize = 64;
    let d = objective.dim();
    let h = radius / STEPS as f64;
    let mut best: f64 = 0.0;
    for axis in 0..d {
        for i in 0..(2 * STEPS) {
            let mut x = center.to_vec();
            x[axis] += -radius + i as f64 * h;
            let mut y = x.clone();
            y[axis] += h;
            let gx = objective.gradient_vec(&x);
            let gy = objective.gradient_vec(&y);
            best = best.max(dist(&gx, &gy) / h);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_basics() {
        let q = quadratic(3).unwrap();
        assert_eq!(q.value(&[0.0; 3]), 0.0);
        assert_eq!(q.gradient_vec(&[1.0, -2.0, 3.0]), vec![1.0, -2.0, 3.0]);
        assert_eq!(q.f_star(), Some(0.0));
        assert!(quadratic(0).is_err());
    }

    #[test]
    fn double_well_roots_and_curvature() {
        let f = double_well(-1.0, 2.0, 1.0).unwrap();
        for x in [-1.0, 0.0, 2.0] {
            assert_eq!(f.gradient_vec(&[x])[0], 0.0);
        }
        assert!(f.second_derivative(0.0).unwrap() < 0.0);
        assert!(f.second_derivative(-1.0).unwrap() > 0.0);
        assert!(f.second_derivative(2.0).unwrap() > 0.0);
        assert_eq!(f.value(&[0.0]), 0.0);
        assert!(double_well(1.0, 2.0, 1.0).is_err());
        assert!(double_well(-1.0, 2.0, 0.0).is_err());
        assert!(f.degenerate_critical_points().is_empty());
    }

    #[test]
    fn symmetric_double_well_is_even() {
        let f = double_well(-1.0, 1.0, 1.0).unwrap();
        for i in 0..=400 {
            let x = -5.0 + i as f64 * 0.025;
            assert!((f.value(&[x]) - f.value(&[-x])).abs() < 1e-12);
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(BasinGeometry::new(vec![-1.0, 2.0], vec![0.0]).is_ok());
        assert!(BasinGeometry::new(vec![-1.0, 2.0], vec![3.0]).is_err());
        assert!(BasinGeometry::new(vec![-1.0, 2.0], vec![]).is_err());
        let g = BasinGeometry::new(vec![-1.0, 2.0, 5.0], vec![0.0, 4.0]).unwrap();
        assert_eq!(g.valley_of(-7.0), 0);
        assert_eq!(g.valley_of(0.5), 1);
        assert_eq!(g.valley_of(4.5), 2);
        assert_eq!(g.max_delta(), 1.0);
    }

    #[test]
    fn dissipativity_examples() {
        let q = quadratic(1).unwrap();
        let probes: Vec<Vec<f64>> = (-10..=10).map(|i| vec![i as f64]).collect();
        assert!(check_dissipativity(&q, 1.0, 0.0, 1.0, &probes));
        assert!(!check_dissipativity(&q, 2.0, 0.0, 1.0, &[vec![1.0]]));
    }

    #[test]
    fn holder_examples() {
        let q = quadratic(2).unwrap();
        let pairs = vec![(vec![0.0, 0.0], vec![1.0, 0.0]), (vec![3.0, -1.0], vec![-2.0, 4.0])];
        assert!(check_holder(&q, 1.0, 1.0, &pairs));
        assert!(!check_holder(&q, 0.5, 1.0, &pairs[..1]));
    }

    #[test]
    fn power_norm_gradient_at_origin() {
        let f = power_norm(4, 0.4).unwrap();
        assert_eq!(f.gradient_vec(&[0.0; 4]), vec![0.0; 4]);
        assert!(power_norm(4, 0.0).is_err());
    }
}
