//! Checkpoint files.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "MCCDCKP1"
//! version  u32      1
//! d        u32
//! h1q      u32
//! fx       u32
//! count    u64      number of f64 parameters that follow
//! params   count * f64
//! ```
//!
//! Parameters are written in the order of [`ModelParams::tensors`]: the five
//! single-qubit modules (I, X, Y, Z, H), then the two-qubit module, then the
//! main and auxiliary readouts. Within a module, layer 1 precedes layer 2 and
//! each layer writes `w_ih, w_hh, b_ih, b_hh`; a readout writes
//! `w1, b1, w2, b2`. Matrices are column-major.

use std::path::Path;

use super::ModelParams;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MCCDCKP1";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 * 4 + 8;

pub fn encode_checkpoint(model: &ModelParams) -> Vec<u8> {
    let n = model.num_params();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    for v in [CHECKPOINT_VERSION, model.d as u32, model.hidden as u32, model.final_size as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for (_, t) in model.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelParams> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("checkpoint truncated".into()));
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let version = u32_at(bytes, 8);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let d = u32_at(bytes, 12) as usize;
    let hidden = u32_at(bytes, 16) as usize;
    let fx = u32_at(bytes, 20) as usize;
    if d < 3 || d % 2 == 0 || d > 101 {
        return Err(Error::Format(format!("bad distance {d} in checkpoint")));
    }
    if hidden == 0 || hidden > 1 << 14 || fx != (d * d - 1) / 2 {
        return Err(Error::Format("bad model dimensions in checkpoint".into()));
    }
    let count = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let mut model = ModelParams::zeros(d, hidden);
    if count != model.num_params() as u64 {
        return Err(Error::Format(format!(
            "checkpoint holds {count} parameters, expected {}",
            model.num_params()
        )));
    }
    if bytes.len() != HEADER_LEN + 8 * count as usize {
        return Err(Error::Format("checkpoint length does not match parameter count".into()));
    }
    let mut chunks = bytes[HEADER_LEN..].chunks_exact(8);
    for (_, t) in model.tensors_mut() {
        for (v, c) in t.iter_mut().zip(&mut chunks) {
            *v = f64::from_le_bytes(c.try_into().unwrap());
        }
    }
    Ok(model)
}

pub fn write_checkpoint(path: impl AsRef<Path>, model: &ModelParams) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    decode_checkpoint(&std::fs::read(path)?)
}
