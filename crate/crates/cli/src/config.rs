use std::path::{Path, PathBuf};

use mvot_core::bench::BenchConfig;
use mvot_core::{PopulationSpec, ProtocolParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Contents of the `--config` file. Every section is optional; flags
/// override whatever the file provides.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    #[serde(default)]
    pub params: Option<ProtocolParams>,
    #[serde(default)]
    pub population: Option<PopulationSpec>,
    #[serde(default)]
    pub bench: Option<BenchConfig>,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => read_json(p),
        }
    }

    /// Population for synthetic inputs, with dimensions forced to match
    /// `params`.
    pub fn population_for(&self, params: &ProtocolParams) -> PopulationSpec {
        let mut spec = self.population.clone().unwrap_or_default();
        spec.dim = params.dim;
        spec.n_channels = params.n;
        spec
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_or_print(out: Option<&PathBuf>, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
