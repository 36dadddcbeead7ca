//! Enrollment, verification and the helper-data container.
//!
//! Each of the `n` channels of a template is hidden among `m` chaff vectors
//! in its own vault at a uniformly random position. Every stored entry gets an
//! independent random scale and a small additive perturbation; neither
//! changes which entries are nearest to a genuine query by more than the
//! perturbation bound. For every `k`-subset of vaults the helper stores a
//! salted SHA-256 over the stored bytes of the template entries in those
//! vaults. Verification retrieves the `tr` entries most similar to the query
//! from each vault and hashes every combination against the commitments.

mod enroll;
mod format;
mod params;
mod verify;

pub use enroll::{enroll, enroll_traced, enroll_with_chaff, revoke_and_reenroll, EnrollmentTrace};
pub use format::{deserialize_helper, serialize_helper, FORMAT_VERSION, MAGIC};
pub use params::{binomial, minimal_chaff, ProtocolParams, DEFAULT_COMBINATION_BUDGET, HASH_VERSION_SHA256, MAX_CHAFF};
pub use verify::{rank_query, verify, verify_sweep, Decision, Diagnostics, RankedQuery, Verification};

use serde::{Deserialize, Serialize};

use crate::embedding::{Embedding, TupleHash};
use crate::error::{MvotError, Result};

pub const SALT_LEN: usize = 16;

/// One channel's public vault: `m + 1` stored (obfuscated) entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Vault {
    channel_index: u32,
    entries: Vec<Embedding>,
    norms: Vec<f64>,
}

impl Vault {
    pub fn new(channel_index: u32, entries: Vec<Embedding>) -> Result<Self> {
        let dim = entries
            .first()
            .ok_or_else(|| MvotError::InvalidParams("vault must not be empty".into()))?
            .dim();
        if let Some(bad) = entries.iter().find(|e| e.dim() != dim) {
            return Err(MvotError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        let norms = entries.iter().map(Embedding::norm).collect();
        Ok(Self {
            channel_index,
            entries,
            norms,
        })
    }

    pub fn channel_index(&self) -> u32 {
        self.channel_index
    }

    pub fn entries(&self) -> &[Embedding] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub(crate) fn norms(&self) -> &[f64] {
        &self.norms
    }
}

/// Digest for one sorted `k`-subset of vault indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub subset: Vec<u32>,
    pub digest: TupleHash,
}

impl Serialize for TupleHash {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TupleHash {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() != 64 {
            return Err(serde::de::Error::custom("digest must be 64 hex characters"));
        }
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(serde::de::Error::custom)?;
        }
        Ok(TupleHash(out))
    }
}

/// Public enrollment output: the vaults plus the subset commitments.
///
/// Holds no template, template position or obfuscation randomness.
#[derive(Clone, Debug, PartialEq)]
pub struct HelperData {
    pub params: ProtocolParams,
    pub vaults: Vec<Vault>,
    pub salt: [u8; SALT_LEN],
    /// Sorted lexicographically by subset.
    pub commitments: Vec<Commitment>,
    pub format_version: u16,
}

impl HelperData {
    pub fn commitment(&self, subset: &[u32]) -> Option<&TupleHash> {
        self.commitments
            .binary_search_by(|c| c.subset.as_slice().cmp(subset))
            .ok()
            .map(|i| &self.commitments[i].digest)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let p = &self.params;
        p.validate()?;
        if self.vaults.len() != p.n {
            return Err(MvotError::ChannelMismatch {
                expected: p.n,
                got: self.vaults.len(),
            });
        }
        for (i, v) in self.vaults.iter().enumerate() {
            if v.len() != p.m + 1 || v.dim() != p.dim || v.channel_index() as usize != i {
                return Err(MvotError::InvalidParams(format!(
                    "vault {i} has {} entries of dim {} (channel {}), expected {} of dim {}",
                    v.len(),
                    v.dim(),
                    v.channel_index(),
                    p.m + 1,
                    p.dim
                )));
            }
        }
        if self.commitments.len() as u128 != p.num_subsets() {
            return Err(MvotError::InvalidParams(format!(
                "{} commitments, expected C({}, {}) = {}",
                self.commitments.len(),
                p.n,
                p.k,
                p.num_subsets()
            )));
        }
        for w in self.commitments.windows(2) {
            if w[0].subset >= w[1].subset {
                return Err(MvotError::InvalidParams("commitments not sorted by subset".into()));
            }
        }
        for c in &self.commitments {
            crate::embedding::check_subset(&c.subset)?;
            if c.subset.len() != p.k || c.subset.iter().any(|&i| i as usize >= p.n) {
                return Err(MvotError::InvalidParams(format!("malformed subset {:?}", c.subset)));
            }
        }
        Ok(())
    }
}
