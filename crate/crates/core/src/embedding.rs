//! Embedding vectors, cosine similarity and the canonical byte encoding that
//! entry hashes are computed over.
//!
//! The canonical encoding is little-endian IEEE-754 binary32 in index order.
//! It is a storage contract: helper files store exactly these bytes and tuple
//! hashes bind to them, so changing it requires a format-version bump.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MvotError, Result};

/// Domain-separation tag prefixed to every tuple hash.
pub const TUPLE_HASH_TAG: &[u8] = b"MVOT/tuple-hash/sha256/v1\0";

/// A finite, nonzero real vector of fixed dimension.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.len() < 2 {
            return Err(MvotError::DimensionTooSmall(values.len()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(MvotError::NonFinite { index });
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(MvotError::ZeroNorm);
        }
        let emb = Self { values };
        // Subnormal-only vectors can still underflow to a zero norm.
        if emb.norm() == 0.0 {
            return Err(MvotError::ZeroNorm);
        }
        Ok(emb)
    }

    /// Builds from f64 components, rounding each to binary32.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| v as f32).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot(&self.values, &other.values))
    }

    /// Returns `r * self`.
    pub fn scaled(&self, r: f64) -> Result<Embedding> {
        Embedding::new(self.values.iter().map(|&v| (f64::from(v) * r) as f32).collect())
    }

    /// Unit-norm copy, computed in f64 and rounded once.
    pub fn normalized(&self) -> Embedding {
        let n = self.norm();
        Embedding {
            values: self.values.iter().map(|&v| (f64::from(v) / n) as f32).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn canonical_bytes(&self) -> CanonicalBytes {
        let mut bytes = Vec::with_capacity(4 * self.dim());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        CanonicalBytes(bytes)
    }
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim() <= 8 {
            f.debug_tuple("Embedding").field(&self.values).finish()
        } else {
            write!(
                f,
                "Embedding(dim={}, [{}, {}, .., {}])",
                self.dim(),
                self.values[0],
                self.values[1],
                self.values[self.dim() - 1]
            )
        }
    }
}

impl TryFrom<Vec<f32>> for Embedding {
    type Error = MvotError;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        Embedding::new(values)
    }
}

impl From<Embedding> for Vec<f32> {
    fn from(e: Embedding) -> Self {
        e.values
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(MvotError::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    // Four independent f64 accumulators let the compiler pipeline the loop.
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let rem_a = chunks_a.remainder();
    let rem_b = chunks_b.remainder();
    for (x, y) in chunks_a.zip(chunks_b) {
        for j in 0..4 {
            acc[j] += f64::from(x[j]) * f64::from(y[j]);
        }
    }
    let mut sum = acc[0] + acc[1] + acc[2] + acc[3];
    for (x, y) in rem_a.iter().zip(rem_b) {
        sum += f64::from(*x) * f64::from(*y);
    }
    sum
}

/// Cosine similarity `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(MvotError::ZeroNorm);
    }
    Ok(cosine_with_norms(a.as_slice(), na, b.as_slice(), nb))
}

#[inline]
pub(crate) fn cosine_with_norms(a: &[f32], na: f64, b: &[f32], nb: f64) -> f64 {
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Little-endian binary32 encoding of an embedding, index order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CanonicalBytes(Vec<u8>);

impl CanonicalBytes {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Decodes back to an embedding; the length must be a multiple of 4 and
    /// the decoded values must satisfy the embedding invariants.
    pub fn decode(&self) -> Result<Embedding> {
        decode_le_f32(&self.0)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        decode_le_f32(&bytes)?;
        Ok(CanonicalBytes(bytes))
    }
}

impl fmt::Debug for CanonicalBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalBytes({} octets)", self.0.len())
    }
}

impl AsRef<[u8]> for CanonicalBytes {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

pub(crate) fn decode_le_f32(bytes: &[u8]) -> Result<Embedding> {
    if bytes.len() % 4 != 0 {
        return Err(MvotError::InvalidParams(format!(
            "canonical byte length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Embedding::new(values)
}

/// 32-octet SHA-256 digest over a tagged, salted tuple of entries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleHash(pub [u8; 32]);

impl TupleHash {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for TupleHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TupleHash({})", self.to_hex())
    }
}

impl fmt::Display for TupleHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

pub(crate) fn check_subset(subset: &[u32]) -> Result<()> {
    if subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MvotError::UnsortedSubset(subset.to_vec()));
    }
    Ok(())
}

/// Hashes `tag ‖ salt ‖ (index_le32 ‖ entry)*` for a strictly ascending
/// subset of vault indices and the entry bytes chosen from those vaults.
pub fn hash_entry_tuple<B: AsRef<[u8]>>(subset: &[u32], entries: &[B], salt: &[u8]) -> Result<TupleHash> {
    check_subset(subset)?;
    if subset.len() != entries.len() {
        return Err(MvotError::SubsetLengthMismatch {
            subset: subset.len(),
            entries: entries.len(),
        });
    }
    let hasher = TupleHasher::new(salt);
    Ok(hasher.digest(subset.iter().copied().zip(entries.iter().map(AsRef::as_ref))))
}

/// Hash state with the tag and salt already absorbed, cloned per tuple.
#[derive(Clone)]
pub(crate) struct TupleHasher {
    prefix: Sha256,
}

impl TupleHasher {
    pub(crate) fn new(salt: &[u8]) -> Self {
        let mut prefix = Sha256::new();
        prefix.update(TUPLE_HASH_TAG);
        prefix.update(salt);
        Self { prefix }
    }

    /// Caller guarantees ascending indices.
    pub(crate) fn digest<'a>(&self, parts: impl IntoIterator<Item = (u32, &'a [u8])>) -> TupleHash {
        let mut h = self.prefix.clone();
        for (index, bytes) in parts {
            h.update(index.to_le_bytes());
            h.update(bytes);
        }
        TupleHash(h.finalize().into())
    }
}
