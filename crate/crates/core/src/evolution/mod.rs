//! One-step evolution of dynamical representations.
//!
//! Three strategies share the same closed-form ridge machinery:
//! frequency-domain operators per low mode ([`spectral`]), local linear
//! operators on a K-means partition of the attractor ([`direct`]), and
//! modern Hopfield retrieval ([`hopfield`]).

pub mod direct;
pub mod hopfield;
pub mod kmeans;
pub mod spectral;

use serde::{Deserialize, Serialize};

pub use direct::{attractor_separation, fit_direct_operators, separation_of, DirectModel};
pub use hopfield::{hopfield_energy, hopfield_update, iterate_to_fixed_point, HopfieldConfig, HopfieldEvolution, HopfieldTrace};
pub use kmeans::{kmeans_partition, AttractorPartition};
pub use spectral::{apply_spectral_evolution, fft_modes, fit_spectral_operators, ifft_modes, SpectralEvolutionModel, SpectralFitter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionStrategy {
    #[default]
    Frequency,
    Direct,
    Hopfield,
}

impl std::str::FromStr for EvolutionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frequency" => Ok(Self::Frequency),
            "direct" => Ok(Self::Direct),
            "hopfield" => Ok(Self::Hopfield),
            other => Err(format!("unknown evolution strategy `{other}`")),
        }
    }
}
