//! Checkpoint files.
//!
//! Layout (little-endian): magic `NSCK`, version `u32` = 1, config block
//! (`u32` byte length + UTF-8 JSON of [`ModelConfig`]), tensor count `u32`,
//! then per tensor: name length `u16`, UTF-8 name, rank `u8`, `u32` per
//! dimension, and the `f32` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::layers::Params;
use super::model::{FusionParameters, ModelConfig};
use super::tensor::Scalar;

const MAGIC: &[u8; 4] = b"NSCK";
const VERSION: u32 = 1;

pub fn write_checkpoint<F: Scalar, W: Write>(params: &FusionParameters<F>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let config = serde_json::to_vec(&params.config)?;
    w.write_all(&(config.len() as u32).to_le_bytes())?;
    w.write_all(&config)?;
    let tensors = params.named_tensors();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[t.shape.len() as u8])?;
        for &dim in &t.shape {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(t.len() * 4);
        for v in &t.data {
            buf.extend_from_slice(&v.to_f32().expect("finite parameter").to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_checkpoint<F: Scalar, R: Read>(mut r: R, path: &Path) -> Result<FusionParameters<F>> {
    let format = |reason: String| Error::Format { path: path.to_path_buf(), reason };
    let mut read = |n: usize, what: &str| -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        r.read_exact(&mut buf).map_err(|e| format(format!("truncated {what}: {e}")))?;
        Ok(buf)
    };
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());

    let head = read(8, "header")?;
    if &head[0..4] != MAGIC {
        return Err(format(format!("bad magic {:?}", &head[0..4])));
    }
    let version = u32_at(&head[4..8]);
    if version != VERSION {
        return Err(format(format!("unsupported version {version}")));
    }
    let len = u32_at(&read(4, "config length")?) as usize;
    let config: ModelConfig = serde_json::from_slice(&read(len, "config")?)
        .map_err(|e| format(format!("bad config block: {e}")))?;
    let mut params = FusionParameters::<F>::zeros(&config)?;
    let count = u32_at(&read(4, "tensor count")?) as usize;

    let mut slots = Vec::new();
    params.visit_mut("", &mut |name, t| slots.push((name, t)));
    if count != slots.len() {
        return Err(format(format!("checkpoint has {count} tensors, model needs {}", slots.len())));
    }
    for (name, slot) in slots {
        let name_len = u16::from_le_bytes(read(2, "name length")?.try_into().unwrap()) as usize;
        let stored = String::from_utf8(read(name_len, "name")?).map_err(|_| format("tensor name not UTF-8".into()))?;
        if stored != name {
            return Err(format(format!("expected tensor {name}, found {stored}")));
        }
        let rank = read(1, "rank")?[0] as usize;
        let shape: Vec<usize> = read(4 * rank, "shape")?.chunks_exact(4).map(|c| u32_at(c) as usize).collect();
        if shape != slot.shape {
            return Err(format(format!("{name}: shape {shape:?}, expected {:?}", slot.shape)));
        }
        let bytes = read(4 * slot.len(), "tensor data")?;
        for (dst, c) in slot.data.iter_mut().zip(bytes.chunks_exact(4)) {
            let v = f32::from_le_bytes(c.try_into().unwrap());
            if !v.is_finite() {
                return Err(format(format!("{name}: non-finite value")));
            }
            *dst = F::from_f32(v).unwrap();
        }
    }
    Ok(params)
}

pub fn save_checkpoint<F: Scalar>(params: &FusionParameters<F>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(params, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<FusionParameters<F>> {
    read_checkpoint(BufReader::new(File::open(path)?), path)
}
