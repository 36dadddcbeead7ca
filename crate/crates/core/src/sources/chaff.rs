use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::EmbeddingTable;
use crate::embedding::Embedding;
use crate::error::{MvotError, Result};
use crate::rng::unit_direction;

/// Supplier of chaff vectors.
#[derive(Clone, Debug)]
pub enum ChaffSource {
    /// Isotropic unit vectors, the same process that produces unrelated
    /// identities. Deterministic in `seed`.
    Synthetic { dim: usize, seed: u64 },
    /// Rows of an ingestion-format file, taken in file order.
    File { path: PathBuf, dim: Option<usize> },
    /// Vectors already in memory, taken in order.
    Vectors(Arc<Vec<Embedding>>),
}

impl ChaffSource {
    pub fn synthetic(dim: usize, seed: u64) -> Self {
        ChaffSource::Synthetic { dim, seed }
    }

    pub fn file(path: impl Into<PathBuf>) -> Self {
        ChaffSource::File {
            path: path.into(),
            dim: None,
        }
    }

    pub fn vectors(v: Vec<Embedding>) -> Self {
        ChaffSource::Vectors(Arc::new(v))
    }

    pub fn generate(&self, count: usize) -> Result<Vec<Embedding>> {
        if count == 0 {
            return Err(MvotError::InvalidParams("chaff count must be at least 1".into()));
        }
        match self {
            ChaffSource::Synthetic { dim, seed } => {
                if *dim < 2 {
                    return Err(MvotError::DimensionTooSmall(*dim));
                }
                let mut rng = ChaCha20Rng::seed_from_u64(*seed);
                (0..count)
                    .map(|_| Embedding::from_f64(&unit_direction(&mut rng, *dim)))
                    .collect()
            }
            ChaffSource::File { path, dim } => {
                let table = EmbeddingTable::load(path, *dim)?;
                take(table.rows().map(|r| r.2.clone()).collect(), count)
            }
            ChaffSource::Vectors(v) => take(v.as_ref().clone(), count),
        }
    }
}

fn take(mut rows: Vec<Embedding>, count: usize) -> Result<Vec<Embedding>> {
    if rows.len() < count {
        return Err(MvotError::ChaffShortage {
            needed: count,
            available: rows.len(),
        });
    }
    rows.truncate(count);
    Ok(rows)
}
