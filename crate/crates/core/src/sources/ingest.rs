//! Text format for embeddings computed elsewhere:
//!
//! ```text
//! # comment
//! identity,channel,v0,v1,...
//! alice,0,0.013,-0.221,...
//! ```
//!
//! UTF-8, comma separated, one record per `(identity, channel)`. Blank lines
//! and `#` comments are ignored; a header line starting with `identity,` is
//! allowed before the first record.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ChannelSet;
use crate::embedding::Embedding;
use crate::error::{MvotError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    rows: Vec<(String, u32, Embedding)>,
    index: HashMap<(String, u32), usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, expected_dim, path)
    }

    /// Parses ingestion text. `source` only labels error messages.
    pub fn parse(text: &str, expected_dim: Option<usize>, source: impl Into<PathBuf>) -> Result<Self> {
        let source = source.into();
        let err = |line: usize, message: String| MvotError::Parse {
            path: source.clone(),
            line,
            message,
        };
        let mut table: Option<EmbeddingTable> = expected_dim.map(EmbeddingTable::new);
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with("identity,") && table.as_ref().is_none_or(|t| t.rows.is_empty()) {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let identity = fields.next().filter(|s| !s.is_empty()).ok_or_else(|| err(line_no, "missing identity".into()))?;
            let channel: u32 = fields
                .next()
                .ok_or_else(|| err(line_no, "missing channel".into()))?
                .parse()
                .map_err(|e| err(line_no, format!("bad channel: {e}")))?;
            let values = fields
                .enumerate()
                .map(|(j, f)| f.parse::<f32>().map_err(|e| err(line_no, format!("value {j}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let t = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            if values.len() != t.dim {
                return Err(err(line_no, format!("expected {} values, found {}", t.dim, values.len())));
            }
            let emb = Embedding::new(values).map_err(|e| err(line_no, e.to_string()))?;
            t.insert(identity.to_string(), channel, emb).map_err(|e| match e {
                MvotError::DuplicateRecord { identity, channel, .. } => MvotError::DuplicateRecord {
                    identity,
                    channel,
                    line: line_no,
                },
                other => other,
            })?;
        }
        table.ok_or_else(|| err(0, "no records and no expected dimension".into()))
    }

    pub fn insert(&mut self, identity: String, channel: u32, emb: Embedding) -> Result<()> {
        if emb.dim() != self.dim {
            return Err(MvotError::DimensionMismatch {
                expected: self.dim,
                got: emb.dim(),
            });
        }
        let key = (identity, channel);
        if self.index.contains_key(&key) {
            return Err(MvotError::DuplicateRecord {
                identity: key.0,
                channel: key.1,
                line: 0,
            });
        }
        self.index.insert(key.clone(), self.rows.len());
        self.rows.push((key.0, key.1, emb));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Records in insertion (file) order.
    pub fn rows(&self) -> impl Iterator<Item = &(String, u32, Embedding)> {
        self.rows.iter()
    }

    pub fn get(&self, identity: &str, channel: u32) -> Option<&Embedding> {
        self.index
            .get(&(identity.to_string(), channel))
            .map(|&i| &self.rows[i].2)
    }

    /// Distinct identities in first-appearance order.
    pub fn identities(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.0.as_str()))
            .map(|r| r.0.as_str())
            .collect()
    }

    /// Channels `0..n` of `identity`.
    pub fn channel_set(&self, identity: &str, n: usize) -> Result<ChannelSet> {
        let channels = (0..n as u32)
            .map(|c| {
                self.get(identity, c).cloned().ok_or_else(|| {
                    MvotError::UnknownIdentity(format!("{identity} (channel {c} missing)"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelSet::new(channels)
    }

    pub fn push_channel_set(&mut self, identity: &str, set: &ChannelSet) -> Result<()> {
        for (c, e) in set.channels().iter().enumerate() {
            self.insert(identity.to_string(), c as u32, e.clone())?;
        }
        Ok(())
    }

    /// Serializes in the ingestion format. Floats are written in shortest
    /// round-trip form, so re-parsing is lossless.
    pub fn to_text(&self) -> String {
        let mut out = String::from("identity,channel,values...\n");
        for (id, ch, e) in &self.rows {
            write!(out, "{id},{ch}").unwrap();
            for v in e.as_slice() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
