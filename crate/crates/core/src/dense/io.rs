//! `IBMI1` binary matrices and plain CSV.
//!
//! Binary layout: the 8-byte magic `IBMI1\0\0\0`, rows and cols as little-endian
//! `u64`, then `rows * cols` little-endian `f64` values in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"IBMI1\0\0\0";

pub fn write_ibmi<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ibmi<R: Read>(mut r: R) -> Result<DenseMatrix> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format("missing IBMI1 header".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word);
    let len = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::Format(format!("unsupported size {rows}x{cols}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Format(format!(
            "expected {} bytes of data, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::from_vec(rows as usize, cols as usize, data)
}

pub fn save_ibmi(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    write_ibmi(BufWriter::new(File::create(path)?), m)
}

pub fn load_ibmi(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_ibmi(BufReader::new(File::open(path)?))
}

/// One matrix row per line, values separated by commas, shortest round-trip
/// decimal form.
pub fn write_csv<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| {
                    Error::Format(format!("line {}: {:?}: {e}", lineno + 1, t.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn save_csv(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), m)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_csv(BufReader::new(File::open(path)?))
}

/// Chooses CSV for a `.csv` extension and `IBMI1` otherwise.
pub fn save_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        save_csv(path, m)
    } else {
        save_ibmi(path, m)
    }
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    if is_csv(path) {
        load_csv(path)
    } else {
        load_ibmi(path)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}
