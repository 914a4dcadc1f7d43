//! Binary field snapshots.
//!
//! Layout (little-endian): `b"GSQG"`, `u32` version, `u32` n, `f64` alpha,
//! `f64` time, then `n * n` `f64` values, row-major with x2 fastest.

use std::fs;
use std::io;
use std::path::Path;

use gsqg_core::spectral::{AlphaParam, GridSpec, RealField};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"GSQG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub n: u32,
    pub alpha: f64,
    pub time: f64,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a GSQG snapshot (bad magic at offset 0)")]
    BadMagic,
    #[error("unsupported snapshot version {version} at offset 4 (expected {VERSION})")]
    BadVersion { version: u32 },
    #[error("payload length mismatch: header at offset 8 gives n = {n}, expecting {expected} payload bytes from offset {HEADER_LEN}, found {found}")]
    Length { n: u32, expected: usize, found: usize },
    #[error("truncated header: {found} bytes, need {HEADER_LEN}")]
    Header { found: usize },
    #[error("invalid field in snapshot: {0}")]
    Field(String),
    #[error("snapshot I/O error: {0}")]
    Io(#[from] io::Error),
}

pub fn encode_snapshot(f: &RealField, alpha: AlphaParam, time: f64) -> Vec<u8> {
    let n = f.grid().n();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&alpha.value().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(SnapshotHeader, RealField), SnapshotError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Header { found: bytes.len() });
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(SnapshotError::BadVersion { version });
    }
    let n = u32_at(bytes, 8);
    let header = SnapshotHeader { version, n, alpha: f64_at(bytes, 12), time: f64_at(bytes, 20) };
    let expected = (n as usize).pow(2) * 8;
    let found = bytes.len() - HEADER_LEN;
    if found != expected {
        return Err(SnapshotError::Length { n, expected, found });
    }
    let grid = GridSpec::new(n as usize).map_err(|e| SnapshotError::Field(e.to_string()))?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let field = RealField::new(grid, values).map_err(|e| SnapshotError::Field(e.to_string()))?;
    Ok((header, field))
}

pub fn write_snapshot(
    f: &RealField,
    alpha: AlphaParam,
    time: f64,
    path: impl AsRef<Path>,
) -> Result<(), SnapshotError> {
    fs::write(path, encode_snapshot(f, alpha, time))?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(SnapshotHeader, RealField), SnapshotError> {
    decode_snapshot(&fs::read(path)?)
}
