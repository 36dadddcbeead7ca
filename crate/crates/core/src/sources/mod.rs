//! Where templates, queries and chaff come from: the synthetic population
//! model, chaff sources, and ingestion of embeddings computed offline.

mod chaff;
mod ingest;
mod population;

pub use chaff::ChaffSource;
pub use ingest::EmbeddingTable;
pub use population::{
    derive_channels, derive_channels_with, ChannelCoupling, DistributionSpec, Population, PopulationSpec,
};

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{MvotError, Result};

/// One capture of one identity across all `n` channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    channels: Vec<Embedding>,
}

impl ChannelSet {
    pub fn new(channels: Vec<Embedding>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| MvotError::InvalidParams("channel set must not be empty".into()))?;
        let dim = first.dim();
        if let Some(bad) = channels.iter().find(|c| c.dim() != dim) {
            return Err(MvotError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self { channels })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.channels[0].dim()
    }

    pub fn channels(&self) -> &[Embedding] {
        &self.channels
    }

    pub fn get(&self, i: usize) -> Option<&Embedding> {
        self.channels.get(i)
    }

    pub fn into_channels(self) -> Vec<Embedding> {
        self.channels
    }
}

impl std::ops::Index<usize> for ChannelSet {
    type Output = Embedding;

    fn index(&self, i: usize) -> &Embedding {
        &self.channels[i]
    }
}
