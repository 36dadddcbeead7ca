use std::path::PathBuf;
use std::str::FromStr;

use mvot_core::{ChaffSource, ChannelSet, EmbeddingTable, Population};
use rand::Rng;

use crate::CliError;

/// Where a template or query comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSpec {
    /// Ground truth of a synthetic identity: `synthetic:<id>`.
    Synthetic(usize),
    /// Fresh genuine capture of a synthetic identity: `genuine:<id>`.
    Genuine(usize),
    /// Cohort capture near a synthetic identity: `cohort:<id>`.
    Cohort(usize),
    /// A face outside the population: `unrelated`.
    Unrelated,
    /// Ingestion-format file.
    File(PathBuf),
}

impl FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let id = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| format!("expected an identity number after ':', got {v:?}"))
        };
        Ok(match s.split_once(':') {
            Some(("synthetic", v)) => InputSpec::Synthetic(id(v)?),
            Some(("genuine", v)) => InputSpec::Genuine(id(v)?),
            Some(("cohort", v)) => InputSpec::Cohort(id(v)?),
            Some(("file", v)) => InputSpec::File(v.into()),
            _ if s == "unrelated" => InputSpec::Unrelated,
            _ if s.is_empty() => return Err("empty input spec".into()),
            _ => InputSpec::File(s.into()),
        })
    }
}

impl InputSpec {
    pub fn resolve<R: Rng>(
        &self,
        population: impl FnOnce() -> Result<Population, CliError>,
        identity: Option<&str>,
        n: usize,
        dim: usize,
        rng: &mut R,
    ) -> Result<ChannelSet, CliError> {
        Ok(match self {
            InputSpec::Synthetic(id) => population()?.ground_truth(*id)?.clone(),
            InputSpec::Genuine(id) => population()?.genuine_query(*id, rng)?,
            InputSpec::Cohort(id) => population()?.cohort_query(*id, rng)?,
            InputSpec::Unrelated => population()?.unrelated_face(rng)?,
            InputSpec::File(path) => {
                let table = EmbeddingTable::load(path, Some(dim))?;
                let name = match identity {
                    Some(name) => name.to_string(),
                    None => match table.identities().as_slice() {
                        [only] => only.to_string(),
                        ids => {
                            return Err(CliError::Usage(format!(
                                "{} holds {} identities; pick one with --identity",
                                path.display(),
                                ids.len()
                            )))
                        }
                    },
                };
                table.channel_set(&name, n)?
            }
        })
    }
}

/// Chaff origin: `synthetic`, `synthetic:<seed>`, or an ingestion file.
#[derive(Clone, Debug, PartialEq)]
pub enum ChaffSpec {
    Synthetic(Option<u64>),
    File(PathBuf),
}

impl FromStr for ChaffSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            _ if s == "synthetic" => Ok(ChaffSpec::Synthetic(None)),
            Some(("synthetic", v)) => v
                .parse()
                .map(|seed| ChaffSpec::Synthetic(Some(seed)))
                .map_err(|_| format!("bad chaff seed {v:?}")),
            _ if s.is_empty() => Err("empty chaff spec".into()),
            _ => Ok(ChaffSpec::File(s.into())),
        }
    }
}

impl ChaffSpec {
    pub fn source<R: Rng>(&self, dim: usize, rng: &mut R) -> ChaffSource {
        match self {
            ChaffSpec::Synthetic(seed) => ChaffSource::synthetic(dim, seed.unwrap_or_else(|| rng.random())),
            ChaffSpec::File(p) => ChaffSource::File {
                path: p.clone(),
                dim: Some(dim),
            },
        }
    }
}
