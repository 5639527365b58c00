//! Run configuration: one strict JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sympass_core::{Domain, EnergySpec, MinimaxConfig, ScanConfig, SymmetrizationConfig, TrickConfig};

use crate::error::CliError;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ENV: &str = "SYMPASS_OUTPUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub energy: EnergySpec,
    pub domain: Domain,
    pub scan: ScanConfig,
    pub minimax: MinimaxConfig,
    pub symmetrization: SymmetrizationConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            energy: EnergySpec::default(),
            domain: Domain {
                dimension: 1,
                half_width: 8.0,
                points_per_axis: 129,
            },
            scan: ScanConfig::default(),
            minimax: MinimaxConfig::default(),
            symmetrization: SymmetrizationConfig::default(),
            seed: 0,
            output_dir: PathBuf::from("sympass-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every sub-config. The energy spec is checked against the domain
    /// dimension; the output directory is checked when it is created.
    pub fn validate(&self) -> Result<(), CliError> {
        self.domain.validate()?;
        self.energy.validate(self.domain.dimension)?;
        self.scan.validate()?;
        self.minimax.validate()?;
        self.symmetrization.validate()?;
        Ok(())
    }

    pub fn trick_config(&self) -> TrickConfig {
        TrickConfig {
            scan: self.scan.clone(),
            minimax: self.minimax,
            symmetrization: self.symmetrization,
            seed: self.seed,
        }
    }
}
