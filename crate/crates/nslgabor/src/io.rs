//! Signal and coefficient file formats.
//!
//! Two formats per object: CSV for inspection and a binary format for
//! bit-exact round trips.
//!
//! * Signal CSV: one `re,im` pair per line, float64 text (17 significant
//!   digits on write).
//! * Signal binary: magic `NSLG`, `u32` little-endian length `L`, then `L`
//!   interleaved little-endian `f64` pairs.
//! * Coefficient CSV: header `m,n,re,im`, one entry per line.
//! * Coefficient binary: magic `NSLC`, `u32` `M`, `u32` `N`, then `M*N`
//!   interleaved `f64` pairs in column-major n-then-m order (time step
//!   outer, frequency index inner).
//!
//! Readers detect the format from the magic bytes; writers pick CSV for a
//! `.csv` extension and binary otherwise.

use crate::dgt::CoefGrid;
use crate::error::{GaborError, Result};
use num_complex::Complex64;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const SIGNAL_MAGIC: &[u8; 4] = b"NSLG";
const COEF_MAGIC: &[u8; 4] = b"NSLC";

fn fmt_f64(x: f64) -> String {
    // 17 significant digits round-trip any f64 through text.
    format!("{x:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| GaborError::Format(format!("bad {what} value {s:?}: {e}")))
}

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

pub fn write_signal_csv<W: Write>(mut w: W, data: &[Complex64]) -> Result<()> {
    for v in data {
        writeln!(w, "{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
    }
    Ok(())
}

pub fn read_signal_csv(text: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let re = parse_f64(
            parts.next().ok_or_else(|| GaborError::Format(format!("line {}: empty", i + 1)))?,
            "re",
        )?;
        let im = parse_f64(
            parts
                .next()
                .ok_or_else(|| GaborError::Format(format!("line {}: missing im part", i + 1)))?,
            "im",
        )?;
        if parts.next().is_some() {
            return Err(GaborError::Format(format!("line {}: too many fields", i + 1)));
        }
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

pub fn write_signal_bin<W: Write>(mut w: W, data: &[Complex64]) -> Result<()> {
    w.write_all(SIGNAL_MAGIC)?;
    w.write_all(&(data.len() as u32).to_le_bytes())?;
    for v in data {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_signal_bin<R: Read>(mut r: R) -> Result<Vec<Complex64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SIGNAL_MAGIC {
        return Err(GaborError::Format("missing NSLG magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let l = u32::from_le_bytes(len) as usize;
    let mut buf = vec![0u8; 16 * l];
    r.read_exact(&mut buf)?;
    let mut out = Vec::with_capacity(l);
    for chunk in buf.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

/// Write a signal file; `.csv` extension selects text, anything else binary.
pub fn write_signal_file(path: &Path, data: &[Complex64]) -> Result<()> {
    let mut buf = Vec::new();
    if path.extension().is_some_and(|e| e == "csv") {
        write_signal_csv(&mut buf, data)?;
    } else {
        write_signal_bin(&mut buf, data)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Read a signal file, detecting the format from the magic bytes.
pub fn read_signal_file(path: &Path) -> Result<Vec<Complex64>> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(SIGNAL_MAGIC) {
        read_signal_bin(&bytes[..])
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| GaborError::Format("signal file is neither NSLG nor UTF-8 CSV".into()))?;
        read_signal_csv(&text)
    }
}

// ---------------------------------------------------------------------------
// Coefficient grids
// ---------------------------------------------------------------------------

pub fn write_coef_csv<W: Write>(mut w: W, c: &CoefGrid) -> Result<()> {
    writeln!(w, "m,n,re,im")?;
    for n in 0..c.n {
        for m in 0..c.m {
            let v = c.get(m, n);
            writeln!(w, "{m},{n},{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
        }
    }
    Ok(())
}

pub fn read_coef_csv(text: &str) -> Result<CoefGrid> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("m,n,re,im") => {}
        other => {
            return Err(GaborError::Format(format!(
                "coefficient CSV must start with 'm,n,re,im' header, got {other:?}"
            )))
        }
    }
    let mut entries = Vec::new();
    let (mut m_max, mut n_max) = (0usize, 0usize);
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(GaborError::Format(format!("line {}: need 4 fields", i + 2)));
        }
        let m: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| GaborError::Format(format!("line {}: bad m index", i + 2)))?;
        let n: usize = parts[1]
            .trim()
            .parse()
            .map_err(|_| GaborError::Format(format!("line {}: bad n index", i + 2)))?;
        let re = parse_f64(parts[2], "re")?;
        let im = parse_f64(parts[3], "im")?;
        m_max = m_max.max(m);
        n_max = n_max.max(n);
        entries.push((m, n, Complex64::new(re, im)));
    }
    if entries.is_empty() {
        return Err(GaborError::Format("empty coefficient file".into()));
    }
    let (rows, cols) = (m_max + 1, n_max + 1);
    if entries.len() != rows * cols {
        return Err(GaborError::Format(format!(
            "coefficient CSV has {} entries, expected {}x{} = {}",
            entries.len(),
            rows,
            cols,
            rows * cols
        )));
    }
    let mut grid = CoefGrid::zeros(rows, cols);
    for (m, n, v) in entries {
        grid.set(m, n, v);
    }
    Ok(grid)
}

pub fn write_coef_bin<W: Write>(mut w: W, c: &CoefGrid) -> Result<()> {
    w.write_all(COEF_MAGIC)?;
    w.write_all(&(c.m as u32).to_le_bytes())?;
    w.write_all(&(c.n as u32).to_le_bytes())?;
    // Column-major n-then-m: time step outer, frequency inner (the grid's
    // native layout).
    for v in &c.data {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_coef_bin<R: Read>(mut r: R) -> Result<CoefGrid> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != COEF_MAGIC {
        return Err(GaborError::Format("missing NSLC magic".into()));
    }
    let mut dims = [0u8; 8];
    r.read_exact(&mut dims)?;
    let m = u32::from_le_bytes(dims[0..4].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(dims[4..8].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; 16 * m * n];
    r.read_exact(&mut buf)?;
    let mut grid = CoefGrid::zeros(m, n);
    for (slot, chunk) in grid.data.iter_mut().zip(buf.chunks_exact(16)) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        *slot = Complex64::new(re, im);
    }
    Ok(grid)
}

pub fn write_coef_file(path: &Path, c: &CoefGrid) -> Result<()> {
    let mut buf = Vec::new();
    if path.extension().is_some_and(|e| e == "csv") {
        write_coef_csv(&mut buf, c)?;
    } else {
        write_coef_bin(&mut buf, c)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_coef_file(path: &Path) -> Result<CoefGrid> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(COEF_MAGIC) {
        read_coef_bin(&bytes[..])
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| GaborError::Format("coefficient file is neither NSLC nor UTF-8 CSV".into()))?;
        read_coef_csv(&text)
    }
}
