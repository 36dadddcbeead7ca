//! Multi-vault obfuscated biometric templates.
//!
//! A template made of `n` per-channel embeddings is enrolled by hiding each
//! channel among `m` chaff vectors in its own vault and committing to every
//! `k`-subset of template entries with a salted hash. A query is verified by
//! retrieving the `tr` nearest entries of each vault and hashing every
//! combination against the commitments.
//!
//! Modules:
//! - [`embedding`]: vectors, cosine similarity, canonical bytes, tuple hashing
//! - [`sources`]: synthetic populations, chaff sources, embedding ingestion
//! - [`vault`]: parameters, enrollment, verification, helper container
//! - [`security`]: work factor, attack simulation, distinguisher tests
//! - [`bench`]: ROC / TPR-TNR tables, score histograms, timing, reports

pub mod bench;
pub mod embedding;
pub mod error;
pub mod rng;
pub mod security;
pub mod sources;
pub mod stats;
pub mod vault;

pub use embedding::{cosine_similarity, hash_entry_tuple, CanonicalBytes, Embedding, TupleHash};
pub use error::{FormatError, MvotError, Result};
pub use sources::{ChaffSource, ChannelSet, DistributionSpec, EmbeddingTable, Population, PopulationSpec};
pub use vault::{
    deserialize_helper, enroll, revoke_and_reenroll, serialize_helper, verify, Decision, HelperData, ProtocolParams,
    Verification,
};
