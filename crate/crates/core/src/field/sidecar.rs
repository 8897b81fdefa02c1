//! Binary coefficient dumps for exact replay.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `NODALCF1` |
//! | 32    | SHA-256 of the canonical spec block |
//! | 8     | seed, u64 |
//! | 8     | coefficient count, u64 |
//! | 8 * count | coefficients, f64 |

use super::{FieldRealization, KernelSpec};
use crate::error::FieldError;
use std::io::{Read, Write};

pub const MAGIC: &[u8; 8] = b"NODALCF1";

pub fn write_sidecar(field: &FieldRealization, mut w: impl Write) -> Result<(), FieldError> {
    let io = |e: std::io::Error| FieldError::Sidecar(e.to_string());
    let coeffs = field.coefficients();
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&field.spec().hash_bytes()).map_err(io)?;
    w.write_all(&field.seed().to_le_bytes()).map_err(io)?;
    w.write_all(&(coeffs.len() as u64).to_le_bytes()).map_err(io)?;
    for c in &coeffs {
        w.write_all(&c.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

/// Reads a sidecar and rebuilds the realization; the spec must hash to the
/// stored header.
pub fn read_sidecar(spec: &KernelSpec, mut r: impl Read) -> Result<FieldRealization, FieldError> {
    let io = |e: std::io::Error| FieldError::Sidecar(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(FieldError::Sidecar("bad magic".into()));
    }
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash).map_err(io)?;
    if hash != spec.hash_bytes() {
        return Err(FieldError::Sidecar("spec hash mismatch".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(io)?;
    let seed = u64::from_le_bytes(word);
    r.read_exact(&mut word).map_err(io)?;
    let count = u64::from_le_bytes(word) as usize;
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut word).map_err(io)?;
        coeffs.push(f64::from_le_bytes(word));
    }
    FieldRealization::from_coefficients(spec.clone(), seed, coeffs)
}
