//! Binary matrix snapshots.
//!
//! Layout: a 28-byte header — magic `RNNW` (4 bytes), format version as
//! little-endian u32, rows and cols as little-endian u64, and a reserved
//! little-endian u32 (written as zero) — followed by the row-major entries
//! as little-endian f64.

use super::matrix::Matrix;
use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"RNNW";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix snapshot".into()));
    }
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let file = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::SnapshotFormat(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::SnapshotFormat(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b4)?; // reserved
    if rows == 0 || cols == 0 {
        return Err(Error::SnapshotFormat("zero dimension".into()));
    }
    let Some(len) = rows.checked_mul(cols) else {
        return Err(Error::SnapshotFormat("dimension overflow".into()));
    };
    let mut m = Matrix::zeros(rows, cols);
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    for (v, chunk) in m.data_mut().iter_mut().zip(buf.chunks_exact(8)) {
        *v = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix snapshot on read".into()));
    }
    Ok(m)
}
