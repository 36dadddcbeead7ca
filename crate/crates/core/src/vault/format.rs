//! Binary helper container. All integers little-endian.
//!
//! ```text
//! magic            4   "MVOT"
//! format_version   u16
//! hash_version     u16
//! params           gamma u32, n u32, m u32, k u32, tr u32, dim u32,
//!                  r_min f64, r_max f64, noise_delta f64, combination_budget u64
//! salt             16
//! vaults           n × { channel_index u32, entry_count u32, entry_count × dim × f32 }
//! commitments      count u32, count × { len u32, len × u32, digest 32 }
//! checksum         u32  CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! Entry bytes are the canonical encoding, byte for byte what the
//! commitments were computed over.

use super::{Commitment, HelperData, ProtocolParams, Vault, SALT_LEN};
use crate::embedding::{decode_le_f32, TupleHash};
use crate::error::{FormatError, MvotError, Result};

pub const MAGIC: [u8; 4] = *b"MVOT";
pub const FORMAT_VERSION: u16 = 1;

pub fn serialize_helper(helper: &HelperData) -> Vec<u8> {
    let p = &helper.params;
    let entry_bytes = 4 * p.dim * (p.m + 1) * p.n;
    let mut out = Vec::with_capacity(entry_bytes + 256 + helper.commitments.len() * (36 + 4 * p.k));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&helper.format_version.to_le_bytes());
    out.extend_from_slice(&p.hash_version.to_le_bytes());
    for v in [p.gamma as usize, p.n, p.m, p.k, p.tr, p.dim] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in [p.scalar_range[0], p.scalar_range[1], p.noise_delta] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&p.combination_budget.to_le_bytes());
    out.extend_from_slice(&helper.salt);
    for vault in &helper.vaults {
        out.extend_from_slice(&vault.channel_index().to_le_bytes());
        out.extend_from_slice(&(vault.len() as u32).to_le_bytes());
        for e in vault.entries() {
            for x in e.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out.extend_from_slice(&(helper.commitments.len() as u32).to_le_bytes());
    for c in &helper.commitments {
        out.extend_from_slice(&(c.subset.len() as u32).to_le_bytes());
        for i in &c.subset {
            out.extend_from_slice(&i.to_le_bytes());
        }
        out.extend_from_slice(c.digest.as_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(FormatError::Truncated(what))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn deserialize_helper(bytes: &[u8]) -> Result<HelperData> {
    if bytes.len() < 8 {
        return Err(FormatError::Version(format!("stream has only {} octets", bytes.len())).into());
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic).into());
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(FormatError::Version(format!("format version {version}, expected {FORMAT_VERSION}")).into());
    }
    if bytes.len() < 12 {
        return Err(FormatError::Truncated("checksum").into());
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed }.into());
    }

    let mut r = Reader { buf: body, pos: 6 };
    let hash_version = r.u16("hash version")?;
    let gamma = r.u32("params")?;
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = r.u32("params")? as usize;
    }
    let [n, m, k, tr, dim] = dims;
    let scalar_range = [r.f64("params")?, r.f64("params")?];
    let noise_delta = r.f64("params")?;
    let combination_budget = r.u64("params")?;
    let params = ProtocolParams {
        gamma,
        n,
        m,
        k,
        tr,
        dim,
        scalar_range,
        noise_delta,
        hash_version,
        combination_budget,
    };
    params
        .validate()
        .map_err(|e| FormatError::Invalid(format!("params block: {e}")))?;
    let salt: [u8; SALT_LEN] = r.take(SALT_LEN, "salt")?.try_into().unwrap();

    let entry_len = 4 * dim;
    let mut vaults = Vec::with_capacity(n);
    for _ in 0..n {
        let channel = r.u32("vault header")?;
        let count = r.u32("vault header")? as usize;
        if count != m + 1 {
            return Err(FormatError::Invalid(format!("vault {channel} has {count} entries, expected {}", m + 1)).into());
        }
        let block = r.take(count * entry_len, "vault entries")?;
        let entries = block
            .chunks_exact(entry_len)
            .map(decode_le_f32)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| FormatError::Invalid(format!("vault {channel}: {e}")))?;
        vaults.push(Vault::new(channel, entries)?);
    }

    let count = r.u32("commitment count")? as usize;
    let mut commitments = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = r.u32("commitment")? as usize;
        if len > n {
            return Err(FormatError::Invalid(format!("commitment subset length {len} > n = {n}")).into());
        }
        let subset = (0..len).map(|_| r.u32("commitment")).collect::<Result<Vec<_>, _>>()?;
        let digest = TupleHash(r.take(32, "digest")?.try_into().unwrap());
        commitments.push(Commitment { subset, digest });
    }
    if r.pos != body.len() {
        return Err(FormatError::Invalid(format!("{} trailing octets", body.len() - r.pos)).into());
    }

    let helper = HelperData {
        params,
        vaults,
        salt,
        commitments,
        format_version: version,
    };
    helper.validate().map_err(|e| match e {
        MvotError::Format(f) => f,
        other => FormatError::Invalid(other.to_string()),
    })?;
    Ok(helper)
}
