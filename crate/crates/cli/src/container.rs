//! Binary container shared by models, Gaussians, centers and vector sets.
//!
//! Layout: the 8-byte magic `CLATMDL1`, a little-endian `u32` header length, a
//! UTF-8 JSON header, then the raw little-endian `f64` blocks in header order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"CLATMDL1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: Value,
    blocks: Vec<BlockInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub info: BlockInfo,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: Value,
    pub blocks: Vec<Block>,
}

impl Container {
    pub fn new(kind: &str, meta: Value) -> Self {
        Self {
            kind: kind.to_string(),
            meta,
            blocks: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) {
        assert_eq!(rows * cols, data.len(), "block `{name}` shape");
        self.blocks.push(Block {
            info: BlockInfo {
                name: name.to_string(),
                rows,
                cols,
            },
            data,
        });
    }

    pub fn with(mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) -> Self {
        self.push(name, rows, cols, data);
        self
    }

    pub fn block(&self, name: &str) -> CliResult<&Block> {
        self.blocks
            .iter()
            .find(|b| b.info.name == name)
            .ok_or_else(|| CliError::Format(format!("{} container has no block `{name}`", self.kind)))
    }

    pub fn expect_kind(&self, kind: &str) -> CliResult<()> {
        if self.kind != kind {
            return Err(CliError::Format(format!(
                "expected a `{kind}` container, found `{}`",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            blocks: self.blocks.iter().map(|b| b.info.clone()).collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        let floats: usize = self.blocks.iter().map(|b| b.data.len()).sum();
        let mut out = Vec::with_capacity(12 + json.len() + 8 * floats);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for b in &self.blocks {
            for v in &b.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(CliError::Format("not a CLATMDL1 container (bad magic)".into()));
        }
        let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = bytes
            .get(12..12 + len)
            .ok_or_else(|| CliError::Format("container header is truncated".into()))?;
        let header: Header =
            serde_json::from_slice(body).map_err(|e| CliError::Format(format!("container header: {e}")))?;
        let mut rest = &bytes[12 + len..];
        let mut blocks = Vec::with_capacity(header.blocks.len());
        for info in header.blocks {
            let n = info
                .rows
                .checked_mul(info.cols)
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| CliError::Format(format!("block `{}` is too large", info.name)))?;
            if rest.len() < n {
                return Err(CliError::Format(format!("block `{}` is truncated", info.name)));
            }
            let data = rest[..n]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            rest = &rest[n..];
            blocks.push(Block { info, data });
        }
        if !rest.is_empty() {
            return Err(CliError::Format(format!(
                "{} trailing bytes after the last block",
                rest.len()
            )));
        }
        Ok(Self {
            kind: header.kind,
            meta: header.meta,
            blocks,
        })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| e.context(path))
    }
}
