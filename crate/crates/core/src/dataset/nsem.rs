//! Binary embedding matrix files.
//!
//! Layout (little-endian): magic `NSEM`, version `u32` = 1, row count `u64`,
//! dim `u32`, channel-name length `u8`, UTF-8 channel name, then
//! `count * dim` row-major `f32` values.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{Channel, EmbeddingMatrix};

pub const MAGIC: &[u8; 4] = b"NSEM";
pub const VERSION: u32 = 1;

pub fn write_matrix<W: Write>(m: &EmbeddingMatrix, mut w: W) -> Result<()> {
    let name = m.channel().name().as_bytes();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.dim() as u32).to_le_bytes())?;
    w.write_all(&[name.len() as u8])?;
    w.write_all(name)?;
    let mut buf = Vec::with_capacity(m.values().len() * 4);
    for v in m.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R, path: &Path) -> Result<EmbeddingMatrix> {
    let format = |reason: String| Error::Format { path: path.to_path_buf(), reason };
    let mut head = [0u8; 21];
    r.read_exact(&mut head).map_err(|e| format(format!("truncated header: {e}")))?;
    if &head[0..4] != MAGIC {
        return Err(format(format!("bad magic {:?}", &head[0..4])));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
    let mut name = vec![0u8; head[20] as usize];
    r.read_exact(&mut name).map_err(|e| format(format!("truncated channel name: {e}")))?;
    let name = String::from_utf8(name).map_err(|_| format("channel name is not UTF-8".into()))?;
    let channel: Channel = name.parse().map_err(|_| format(format!("unknown channel {name:?}")))?;

    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| format("size overflow".into()))?;
    if bytes.len() != expected {
        return Err(format(format!("expected {expected} data bytes, found {}", bytes.len())));
    }
    let values: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { channel: name, row: pos / dim.max(1), col: pos % dim.max(1) });
    }
    EmbeddingMatrix::new(channel, rows, dim, values)
}
