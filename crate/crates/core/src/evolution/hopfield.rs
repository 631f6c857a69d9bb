use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, sq_dist};

/// Stored patterns (one per row) and retrieval settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfieldConfig {
    pub patterns: Vec<Vec<f64>>,
    pub beta: f64,
    pub max_iters: usize,
}

impl HopfieldConfig {
    pub fn new(patterns: Vec<Vec<f64>>, beta: f64, max_iters: usize) -> Result<Self> {
        let cfg = Self { patterns, beta, max_iters };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        let first = self.patterns.first().ok_or(Error::EmptyInput)?;
        if self.patterns.iter().any(|p| p.len() != first.len()) {
            return Err(Error::ShapeMismatch("patterns differ in dimension".into()));
        }
        if self.patterns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.patterns[0].len()
    }
}

/// Numerically stable `softmax(β s)`.
pub(crate) fn softmax(scores: &[f64], beta: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = scores.iter().map(|s| (beta * (s - max)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Weighted combination `Σ_i w_i v_i`.
pub(crate) fn combine(values: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values[0].len()];
    for (v, &w) in values.iter().zip(weights) {
        out.iter_mut().zip(v).for_each(|(o, x)| *o += w * x);
    }
    out
}

/// `ξ_new = X softmax(β Xᵀ ξ)`.
pub fn hopfield_update(query: &[f64], config: &HopfieldConfig) -> Vec<f64> {
    let scores: Vec<f64> = config.patterns.iter().map(|p| dot(p, query)).collect();
    combine(&config.patterns, &softmax(&scores, config.beta))
}

/// `E(ξ) = −β⁻¹ log Σ exp(β x_iᵀξ) + ½ξᵀξ + β⁻¹ log P + ½M²` with
/// `M = max ‖x_i‖`.
pub fn hopfield_energy(xi: &[f64], config: &HopfieldConfig) -> f64 {
    let beta = config.beta;
    let scores: Vec<f64> = config.patterns.iter().map(|p| dot(p, xi)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (beta * (s - max)).exp()).sum::<f64>().ln() / beta;
    let big_m2 = config.patterns.iter().map(|p| dot(p, p)).fold(0.0, f64::max);
    -lse + 0.5 * dot(xi, xi) + (config.patterns.len() as f64).ln() / beta + 0.5 * big_m2
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldTrace {
    pub state: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Energy of the query followed by the energy after each update.
    pub energies: Vec<f64>,
}

/// Repeats [`hopfield_update`] until `‖Δξ‖ < 1e-8` or `max_iters`.
pub fn iterate_to_fixed_point(query: &[f64], config: &HopfieldConfig) -> HopfieldTrace {
    let mut xi = query.to_vec();
    let mut energies = vec![hopfield_energy(&xi, config)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        let next = hopfield_update(&xi, config);
        iterations += 1;
        let step = sq_dist(&next, &xi).sqrt();
        xi = next;
        energies.push(hopfield_energy(&xi, config));
        if step < 1e-8 {
            converged = true;
            break;
        }
    }
    HopfieldTrace {
        state: xi,
        iterations,
        converged,
        energies,
    }
}

/// Hetero-associative retrieval `V softmax(β Kᵀ ξ)`: keys are attractor
/// centroids and values their successors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfieldEvolution {
    pub keys: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub beta: f64,
}

impl HopfieldEvolution {
    /// Returns the query unchanged when no keys are stored.
    pub fn apply(&self, query: &[f64]) -> Vec<f64> {
        if self.keys.is_empty() {
            return query.to_vec();
        }
        let scores: Vec<f64> = self.keys.iter().map(|k| dot(k, query)).collect();
        combine(&self.values, &softmax(&scores, self.beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_beta_picks_nearest_pattern() {
        let cfg = HopfieldConfig::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1e6, 10).unwrap();
        let out = hopfield_update(&[0.9, 0.2], &cfg);
        assert!((out[0] - 1.0).abs() < 1e-6 && out[1].abs() < 1e-6);
    }

    #[test]
    fn vanishing_beta_gives_mean() {
        let cfg = HopfieldConfig::new(vec![vec![1.0, 2.0], vec![3.0, -2.0]], 1e-300, 1).unwrap();
        let out = hopfield_update(&[5.0, 5.0], &cfg);
        assert!((out[0] - 2.0).abs() < 1e-12 && out[1].abs() < 1e-12);
    }

    #[test]
    fn invalid_beta() {
        assert!(HopfieldConfig::new(vec![vec![1.0]], 0.0, 1).is_err());
        assert!(HopfieldConfig::new(vec![], 1.0, 1).is_err());
    }
}
