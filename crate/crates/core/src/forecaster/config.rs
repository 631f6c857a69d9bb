use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionStrategy;
use crate::polyproj::SsmVariant;
use crate::psr::EmbeddingParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

/// Fixed delay embedding or `"auto"` selection per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "EmbeddingRepr", into = "EmbeddingRepr")]
pub enum EmbeddingChoice {
    #[default]
    Auto,
    Fixed(EmbeddingParams),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EmbeddingRepr {
    Auto(AutoKeyword),
    Fixed(EmbeddingParams),
}

impl From<EmbeddingRepr> for EmbeddingChoice {
    fn from(r: EmbeddingRepr) -> Self {
        match r {
            EmbeddingRepr::Auto(_) => Self::Auto,
            EmbeddingRepr::Fixed(p) => Self::Fixed(p),
        }
    }
}

impl From<EmbeddingChoice> for EmbeddingRepr {
    fn from(c: EmbeddingChoice) -> Self {
        match c {
            EmbeddingChoice::Auto => Self::Auto(AutoKeyword::Auto),
            EmbeddingChoice::Fixed(p) => Self::Fixed(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterConfig {
    pub embedding: EmbeddingChoice,
    /// Context length `W` in samples.
    pub window: usize,
    pub horizon: usize,
    pub patch_len: usize,
    pub poly_order: usize,
    pub ssm_variant: SsmVariant,
    /// Measure window `θ`; each patch step uses `Δ = θ / p`.
    pub theta: f64,
    /// Wavelet hierarchy depth.
    pub levels: usize,
    /// Cap on retained modes per scale; `None` keeps every mode.
    pub m_modes: Option<usize>,
    /// Regularizer of the evolution operators.
    pub ridge_lambda: f64,
    /// Readout regularizer per training example: the penalty is
    /// `readout_lambda · n_examples · ‖W‖²`.
    pub readout_lambda: f64,
    pub evolution_strategy: EvolutionStrategy,
    pub teacher_alpha: f64,
    /// Spacing between consecutive training windows.
    pub stride: usize,
    /// Cluster count for the direct and Hopfield strategies.
    pub n_clusters: usize,
    pub hopfield_beta: f64,
    pub kmeans_max_iters: usize,
    /// Upper bound on points handed to K-means per scale.
    pub kmeans_sample: usize,
    pub seed: u64,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            embedding: EmbeddingChoice::Auto,
            window: 96,
            horizon: 16,
            patch_len: 8,
            poly_order: 4,
            ssm_variant: SsmVariant::DiagNeg1,
            theta: 1.0,
            levels: 2,
            m_modes: None,
            ridge_lambda: 1e-3,
            readout_lambda: 0.1,
            evolution_strategy: EvolutionStrategy::Frequency,
            teacher_alpha: 0.0,
            stride: 1,
            n_clusters: 8,
            hopfield_beta: 1.0,
            kmeans_max_iters: 50,
            kmeans_sample: 20_000,
            seed: 0,
        }
    }
}

impl ForecasterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if self.patch_len < 1 || self.poly_order < 1 || self.stride < 1 {
            return bad("patch_len, poly_order and stride must be at least 1".into());
        }
        if self.window < 2 * self.patch_len {
            return bad(format!(
                "window {} must hold at least two patches of length {}",
                self.window, self.patch_len
            ));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.ridge_lambda >= 0.0) || !(self.readout_lambda >= 0.0) {
            return bad("ridge regularizers must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.teacher_alpha) {
            return bad(format!("teacher_alpha {} outside [0, 1]", self.teacher_alpha));
        }
        if self.m_modes == Some(0) {
            return bad("m_modes must be positive".into());
        }
        if self.n_clusters < 1 || !(self.hopfield_beta > 0.0) {
            return bad("n_clusters and hopfield_beta must be positive".into());
        }
        if let EmbeddingChoice::Fixed(p) = self.embedding {
            EmbeddingParams::new(p.m, p.tau)?;
        }
        Ok(())
    }

    /// `Δ = θ / p`.
    pub fn delta(&self) -> f64 {
        self.theta / self.patch_len as f64
    }

    /// Samples one training example consumes: the window plus what lies
    /// `horizon` ahead of it.
    pub fn example_span(&self) -> usize {
        self.window + self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_choice_json() {
        let auto: EmbeddingChoice = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(auto, EmbeddingChoice::Auto);
        let fixed: EmbeddingChoice = serde_json::from_str(r#"{"m":3,"tau":2}"#).unwrap();
        assert_eq!(fixed, EmbeddingChoice::Fixed(EmbeddingParams { m: 3, tau: 2 }));
        assert_eq!(serde_json::to_string(&auto).unwrap(), "\"auto\"");
        assert!(serde_json::from_str::<EmbeddingChoice>("\"manual\"").is_err());
    }

    #[test]
    fn config_defaults_and_unknown_keys() {
        let c: ForecasterConfig = serde_json::from_str(r#"{"horizon":4}"#).unwrap();
        assert_eq!(c.horizon, 4);
        assert_eq!(c.window, 96);
        assert!(serde_json::from_str::<ForecasterConfig>(r#"{"horizn":4}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(ForecasterConfig::default().validate().is_ok());
        let c = ForecasterConfig { horizon: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ForecasterConfig { teacher_alpha: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ForecasterConfig { window: 10, patch_len: 8, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
