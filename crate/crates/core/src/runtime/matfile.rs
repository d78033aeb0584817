//! `CMV1` matrix files: magic, u64 rows, u64 cols, row-major f64, all
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAGIC: &[u8; 4] = b"CMV1";

pub fn write_matrix<W: Write>(w: &mut W, a: &Matrix) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for v in a.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<Matrix> {
    let bad = |reason: &str| Error::Format {
        path: "<stream>".into(),
        reason: reason.into(),
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| bad("missing header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic, expected CMV1"));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)
        .map_err(|_| bad("missing row count"))?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)
        .map_err(|_| bad("missing column count"))?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| bad("dimensions overflow"))?;
    let mut data = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        r.read_exact(&mut word)
            .map_err(|_| bad("truncated matrix data"))?;
        data.push(f64::from_le_bytes(word));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(bad("trailing bytes after matrix data"));
    }
    Matrix::from_vec(rows, cols, data)
}

pub fn save_matrix(path: &Path, a: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let mut r = BufReader::new(File::open(path)?);
    read_matrix(&mut r).map_err(|e| match e {
        Error::Format { reason, .. } => Error::Format {
            path: path.display().to_string(),
            reason,
        },
        other => other,
    })
}
