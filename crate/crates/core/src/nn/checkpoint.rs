//! Checkpoint container.
//!
//! Layout: an 8-byte little-endian header length `n`, `n` bytes of UTF-8 JSON
//! header, then the tensor payload as little-endian `f64` values. The header is
//!
//! ```json
//! {"format_version":1,"config":{...},"tensors":[{"name":"...","shape":[..],"offset":0}]}
//! ```
//!
//! where `offset` is the byte offset of the tensor inside the payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NnError, Tensor};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

/// Decoded checkpoint: free-form config plus named tensors in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: serde_json::Value,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0;
        let entries = self
            .tensors
            .iter()
            .map(|(name, t)| {
                let e = TensorEntry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                    offset,
                };
                offset += t.len() * 8;
                e
            })
            .collect();
        let header = serde_json::to_vec(&Header {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            tensors: entries,
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(8 + header.len() + offset);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, t) in &self.tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let bad = |msg: &str| NnError::Checkpoint(msg.to_string());
        if bytes.len() < 8 {
            return Err(bad("truncated header length"));
        }
        let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let header_end = 8usize
            .checked_add(n)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[8..header_end])
            .map_err(|e| NnError::Checkpoint(format!("bad header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        let payload = &bytes[header_end..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for entry in header.tensors {
            let count: usize = entry.shape.iter().product();
            let end = entry
                .offset
                .checked_add(count * 8)
                .filter(|&e| e <= payload.len())
                .ok_or_else(|| {
                    NnError::Checkpoint(format!("tensor {} exceeds payload", entry.name))
                })?;
            let data = payload[entry.offset..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push((entry.name, Tensor::from_vec(&entry.shape, data)?));
        }
        Ok(Checkpoint {
            config: header.config,
            tensors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor, NnError> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| NnError::Checkpoint(format!("missing tensor {name}")))
    }
}
