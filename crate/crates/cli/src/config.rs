use std::path::Path;

use attraos_core::evolution::EvolutionStrategy;
use attraos_core::forecaster::{EmbeddingChoice, ForecasterConfig};
use attraos_core::polyproj::SsmVariant;
use attraos_core::psr::EmbeddingParams;
use serde::Deserialize;

use crate::error::CliError;
use crate::ForecasterFlags;

pub const SCHEMA_VERSION: u32 = 1;

/// Run configuration for `fit`.
///
/// ```json
/// {"v": 1, "seed": 7, "forecaster": {"window": 96, "horizon": 16}}
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub v: u32,
    pub seed: Option<u64>,
    #[serde(default)]
    pub forecaster: ForecasterConfig,
}

impl FitConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: FitConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
        if cfg.v != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported configuration version {}, expected {SCHEMA_VERSION}",
                cfg.v
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Merges the configuration file (if any) with command-line flags and
/// enforces the seed rule: a seed is required whenever fitting clusters.
pub fn resolve(file: Option<FitConfig>, flags: &ForecasterFlags) -> Result<ForecasterConfig, CliError> {
    let (mut cfg, mut seed) = match file {
        Some(f) => (f.forecaster, f.seed),
        None => (ForecasterConfig::default(), None),
    };
    macro_rules! apply {
        ($($field:ident => $target:ident),* $(,)?) => {
            $(if let Some(v) = flags.$field { cfg.$target = v; })*
        };
    }
    apply!(
        window => window,
        horizon => horizon,
        patch_len => patch_len,
        poly_order => poly_order,
        theta => theta,
        levels => levels,
        ridge_lambda => ridge_lambda,
        readout_lambda => readout_lambda,
        strategy => evolution_strategy,
        teacher_alpha => teacher_alpha,
        stride => stride,
        n_clusters => n_clusters,
        hopfield_beta => hopfield_beta,
    );
    if let Some(k) = flags.m_modes {
        cfg.m_modes = Some(k);
    }
    if let Some(name) = &flags.ssm_variant {
        cfg.ssm_variant = serde_json::from_value::<SsmVariant>(serde_json::Value::String(name.clone()))
            .map_err(|_| CliError::Usage(format!("unknown ssm variant `{name}`")))?;
    }
    if let (Some(m), Some(tau)) = (flags.m, flags.tau) {
        cfg.embedding = EmbeddingChoice::Fixed(EmbeddingParams::new(m, tau)?);
    }
    if flags.seed.is_some() {
        seed = flags.seed;
    }
    match seed {
        Some(s) => cfg.seed = s,
        None if cfg.evolution_strategy != EvolutionStrategy::Frequency => {
            return Err(CliError::Usage(format!(
                "the {:?} strategy clusters the attractor and needs a seed (--seed or \"seed\" in the config)",
                cfg.evolution_strategy
            )))
        }
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_and_unknown_keys() {
        assert!(FitConfig::parse(r#"{"v":1}"#).is_ok());
        assert!(matches!(FitConfig::parse(r#"{"v":2}"#), Err(CliError::Usage(_))));
        assert!(FitConfig::parse(r#"{"seed":1}"#).is_err());
        assert!(FitConfig::parse(r#"{"v":1,"sede":1}"#).is_err());
        assert!(FitConfig::parse(r#"{"v":1,"forecaster":{"windw":3}}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = FitConfig::parse(r#"{"v":1,"seed":3,"forecaster":{"window":64,"horizon":8}}"#).unwrap();
        let flags = ForecasterFlags {
            horizon: Some(4),
            ..Default::default()
        };
        let cfg = resolve(Some(file), &flags).unwrap();
        assert_eq!((cfg.window, cfg.horizon, cfg.seed), (64, 4, 3));
    }

    #[test]
    fn clustering_needs_a_seed() {
        let flags = ForecasterFlags {
            strategy: Some(EvolutionStrategy::Direct),
            ..Default::default()
        };
        assert!(matches!(resolve(None, &flags), Err(CliError::Usage(_))));
        let flags = ForecasterFlags {
            strategy: Some(EvolutionStrategy::Direct),
            seed: Some(0),
            ..Default::default()
        };
        assert!(resolve(None, &flags).is_ok());
        assert!(resolve(None, &ForecasterFlags::default()).is_ok());
    }
}
